"""Post-hoc orthogonal decomposition of a walk trace.

From a finished trace we rebuild the freeze ordering of the coordinates, the
Gram-Schmidt directions of the columns taken in that order, the per-pivot
partition of positions into freeze blocks, the count of nontrivial blocks,
and the per-direction variance proxy that drives the concentration bound.

Positions and column indices are 0-based throughout; step numbers are 1-based
as recorded in the trace.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolationError
from .instances import Instance
from .walk import WalkTrace

ZERO_RESIDUAL_RTOL = 1e-10


@dataclass
class OrthoDecomposition:
    order: np.ndarray                   # order[r] = column index at position r
    position: np.ndarray                # inverse of order
    directions: np.ndarray = field(repr=False)  # (n, d); row r unit vector or 0
    pivot_phases: list[tuple[int, int]]  # (pivot, start step), in pivot order
    blocks: dict[tuple[int, int], tuple[int, ...]]  # (pivot, step) -> positions
    block_counts: dict[int, int]        # pivot -> nontrivial block count
    total_nontrivial: int               # sum of block_counts

    def pivot_blocks(self, pivot: int) -> list[tuple[int, ...]]:
        return [q for (p, _), q in self.blocks.items() if p == pivot and q]


def freeze_order(trace: WalkTrace) -> np.ndarray:
    """Permutation assigning positions: order[r] = column at position r.

    The first pivot takes the top position; frozen coordinates take decreasing
    positions in freeze order (largest index first within a step); each new
    pivot takes the next free position when it first becomes pivot.
    """
    n = len(trace.final_x)
    pos_of = np.full(n, -1, dtype=int)
    next_pos = n - 1
    for rec in trace.steps:
        if pos_of[rec.pivot] < 0:
            pos_of[rec.pivot] = next_pos
            next_pos -= 1
        for j in rec.frozen:        # already decreasing
            if j == rec.pivot:
                continue
            pos_of[j] = next_pos
            next_pos -= 1
    if next_pos != -1 or np.any(pos_of < 0):
        raise ContractViolationError("frozen sets of the trace do not partition [n]")
    order = np.empty(n, dtype=int)
    order[pos_of] = np.arange(n)
    return order


def gram_schmidt_sequence(inst: Instance, order: np.ndarray) -> np.ndarray:
    """Orthonormal residual directions of the columns taken in position order.

    Row r is the normalized residual of column order[r] against the span of the
    earlier columns, or exactly zero when the residual norm falls below
    ``ZERO_RESIDUAL_RTOL`` relative to the column norm.
    """
    n = inst.n
    w = np.zeros((n, inst.d))
    for r in range(n):
        v = inst.matrix[:, order[r]].copy()
        scale = np.linalg.norm(v)
        if r:
            v -= w[:r].T @ (w[:r] @ v)
            # second pass for numerical orthogonality
            v -= w[:r].T @ (w[:r] @ v)
        nrm = np.linalg.norm(v)
        if scale > 0 and nrm > ZERO_RESIDUAL_RTOL * scale:
            w[r] = v / nrm
    return w


def freeze_blocks(trace: WalkTrace, order: np.ndarray):
    """Partition positions into per-pivot freeze blocks.

    Returns ``(blocks, pivot_phases)`` where ``blocks[(p, t)]`` holds the
    positions frozen at step t while p was pivot, plus the pivot's own
    singleton block keyed by the step before its phase started.
    """
    n = len(order)
    pos_of = np.empty(n, dtype=int)
    pos_of[order] = np.arange(n)
    blocks: dict[tuple[int, int], tuple[int, ...]] = {}
    phases: list[tuple[int, int]] = []
    for rec in trace.steps:
        if not phases or phases[-1][0] != rec.pivot:
            phases.append((rec.pivot, rec.t))
            blocks[(rec.pivot, rec.t - 1)] = (int(pos_of[rec.pivot]),)
        non_pivot = tuple(int(pos_of[j]) for j in rec.frozen if j != rec.pivot)
        if non_pivot:
            blocks[(rec.pivot, rec.t)] = non_pivot
    covered = sorted(r for q in blocks.values() for r in q)
    if covered != list(range(n)):
        raise ContractViolationError("freeze blocks do not partition the positions")
    return blocks, phases


def count_nontrivial(blocks, directions: np.ndarray):
    """Per-pivot counts of blocks contributing a nonzero direction, and their sum.

    Blocks whose every position carries a zero residual direction are trivial:
    they add no new orthogonal vector and are excluded from the count.
    """
    nonzero = np.linalg.norm(directions, axis=1) > 0.5
    counts: dict[int, int] = {}
    for (p, _), q in blocks.items():
        if any(nonzero[r] for r in q):
            counts[p] = counts.get(p, 0) + 1
        else:
            counts.setdefault(p, 0)
    return counts, sum(counts.values())


def decompose(inst: Instance, trace: WalkTrace) -> OrthoDecomposition:
    """Full decomposition of a trace."""
    order = freeze_order(trace)
    directions = gram_schmidt_sequence(inst, order)
    blocks, phases = freeze_blocks(trace, order)
    counts, total = count_nontrivial(blocks, directions)
    position = np.empty(len(order), dtype=int)
    position[order] = np.arange(len(order))
    return OrthoDecomposition(order=order, position=position,
                              directions=directions, pivot_phases=phases,
                              blocks=blocks, block_counts=counts,
                              total_nontrivial=total)


def variance_proxy(inst: Instance, ortho: OrthoDecomposition, v) -> float:
    """The path-dependent proxy controlling the subgaussian bound along v.

    Per pivot, sums over its freeze blocks the absolute block inner products
    of the pivot column and v against the orthogonal directions, then squares
    and adds up.  Always in [0, ||v||^2].
    """
    return float(variance_proxy_batch(inst, ortho, np.asarray(v, float)[:, None])[0])


def variance_proxy_batch(inst: Instance, ortho: OrthoDecomposition,
                         vs: np.ndarray) -> np.ndarray:
    """Vectorized proxy for the columns of ``vs`` (shape (d, m))."""
    m = vs.shape[1]
    beta = ortho.directions @ vs          # (n, m)
    out = np.zeros(m)
    for p, _ in ortho.pivot_phases:
        alpha = ortho.directions @ inst.matrix[:, p]
        acc = np.zeros(m)
        for q in ortho.pivot_blocks(p):
            idx = list(q)
            acc += np.abs(alpha[idx] @ beta[idx])
        out += acc ** 2
    return out


def basis_variance_proxies(inst: Instance, ortho: OrthoDecomposition) -> np.ndarray:
    """Proxies along all standard basis directions e_1..e_d at once."""
    return variance_proxy_batch(inst, ortho, np.eye(inst.d))


def direction_expansion_residual(inst: Instance, trace: WalkTrace,
                                 ortho: OrthoDecomposition) -> float:
    """Max over steps of ||M u_t - (its expansion in the orthogonal directions)||.

    At step t with a active coordinates and pivot at position g, the step
    direction image expands over positions a-1..g.  A small residual ties the
    executed walk to the reconstructed decomposition.
    """
    n = inst.n
    worst = 0.0
    remaining = n
    for rec in trace.steps:
        lo = remaining - 1          # 0-based position of the first free slot
        g = int(ortho.position[rec.pivot])
        mu = inst.matrix @ rec.u
        vp = inst.matrix[:, rec.pivot]
        approx = np.zeros(inst.d)
        for r in range(lo, g + 1):
            approx += (ortho.directions[r] @ vp) * ortho.directions[r]
        worst = max(worst, float(np.linalg.norm(mu - approx)))
        remaining -= len(rec.frozen)
    return worst


def project_pivot(ortho: OrthoDecomposition, pivot: int, v) -> np.ndarray:
    """Orthogonal projection of v onto the subspace of the pivot's blocks."""
    if all(p != pivot for p, _ in ortho.pivot_phases):
        raise ContractViolationError(f"index {pivot} never became pivot")
    v = np.asarray(v, float)
    out = np.zeros_like(v)
    for q in ortho.pivot_blocks(pivot):
        for r in q:
            out += (ortho.directions[r] @ v) * ortho.directions[r]
    return out
