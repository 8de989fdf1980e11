"""Problem instances: a d x n matrix whose columns are the input vectors.

Columns must satisfy ||v_i||_2 <= 1 (up to a small load tolerance).  Instances
are immutable after construction and safe to share between threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, InstanceFormatError, NormViolationError

NORM_TOL = 1e-9

KINDS = ("identity", "random_unit_sphere", "random_in_ball", "duplicated_column",
         "sign_columns")


@dataclass(frozen=True)
class Instance:
    """A balancing instance: columns of ``matrix`` are the vectors v_1..v_n."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise DimensionError(f"instance matrix must be 2-D with d,n >= 1, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InstanceFormatError("instance contains non-finite entries")
        norms = np.linalg.norm(m, axis=0)
        worst = float(norms.max())
        if worst > 1.0 + NORM_TOL:
            raise NormViolationError(
                f"column norm {worst:.6g} exceeds 1 + {NORM_TOL:g}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.matrix[:, i]


def generate_instance(kind: str, d: int, n: int, seed: int) -> Instance:
    """Deterministically generate a test instance of the given family."""
    if d < 1 or n < 1:
        raise DimensionError(f"d and n must be >= 1, got d={d}, n={n}")
    if kind == "identity":
        if n > d:
            raise DimensionError(f"identity instance needs n <= d, got d={d}, n={n}")
        m = np.zeros((d, n))
        m[np.arange(n), np.arange(n)] = 1.0
        return Instance(m)
    if kind == "duplicated_column":
        m = np.zeros((d, n))
        m[0, :] = 1.0
        return Instance(m)
    if kind == "sign_columns":
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
        m = rng.choice([-1.0, 1.0], size=(d, n)) / math.sqrt(d)
        return Instance(m)
    if kind == "random_unit_sphere":
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
        m = rng.standard_normal((d, n))
        m /= np.linalg.norm(m, axis=0)
        return Instance(m)
    if kind == "random_in_ball":
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
        m = rng.standard_normal((d, n))
        m /= np.linalg.norm(m, axis=0)
        m *= rng.random(n) ** (1.0 / d)
        return Instance(m)
    raise InstanceFormatError(f"unknown instance kind {kind!r}; expected one of {KINDS}")


def load_instance(path) -> Instance:
    """Read an instance file: header line "d n", then d rows of n floats."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise InstanceFormatError(f"{path}: empty instance file")
    header = lines[0].split()
    if len(header) != 2:
        raise InstanceFormatError(f"{path}: header must be 'd n', got {lines[0]!r}")
    try:
        d, n = int(header[0]), int(header[1])
    except ValueError as exc:
        raise InstanceFormatError(f"{path}: non-integer header {lines[0]!r}") from exc
    if len(lines) - 1 != d:
        raise DimensionError(f"{path}: expected {d} data rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != n:
            raise DimensionError(f"{path}: expected {n} entries per row, found {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise InstanceFormatError(f"{path}: unparseable float in row {ln!r}") from exc
    return Instance(np.array(rows))


def save_instance(inst: Instance, path) -> None:
    """Write an instance in the plain-text format read by :func:`load_instance`."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{inst.d} {inst.n}\n")
        for row in inst.matrix:
            fh.write(" ".join(format(x, ".17g") for x in row) + "\n")
