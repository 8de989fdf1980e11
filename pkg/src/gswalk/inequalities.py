"""Numeric certification of the scalar inequalities behind the analysis.

Each function returns a gap (claimed-larger side minus claimed-smaller side);
the grid drivers sweep the documented domains and report the minimum gap.
These are analytic facts checked as numeric regressions, not formal proofs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainOverflowError

EXP_GUARD = 50.0


def _check_exponent(*values):
    worst = max(float(np.max(np.abs(v))) for v in values)
    if worst > EXP_GUARD:
        raise DomainOverflowError(f"argument magnitude {worst:.3g} exceeds {EXP_GUARD}")


def lemma1_gap(x, a, b):
    """Gap of the two-point moment-ratio bound, for x in [-1,1].

    With A(s) = (1-x)/2 exp(-(1+x)s) + (1+x)/2 exp((1-x)s) the mean-zero
    two-point moment at s, returns exp(|a||b| + b^2/2) - A(a+b)/A(a).
    The ratio form is the inductive step the bound rests on; at b = 0 both
    sides are 1, and at x = a = 0 the ratio is cosh(b).  Nonnegative up to
    roundoff.  Accepts scalars or broadcasting arrays.
    """
    x = np.asarray(x, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    _check_exponent(a, b)
    lhs = np.exp(np.abs(a) * np.abs(b) + 0.5 * b * b)
    s = a + b
    num = 0.5 * (1.0 - x) * np.exp(-(1.0 + x) * s) + 0.5 * (1.0 + x) * np.exp((1.0 - x) * s)
    den = 0.5 * (1.0 - x) * np.exp(-(1.0 + x) * a) + 0.5 * (1.0 + x) * np.exp((1.0 - x) * a)
    out = lhs - num / den
    return float(out) if out.ndim == 0 else out


def two_point_mgf_gap(z, b):
    """Gap of the Hoeffding step for a mean-zero two-point variable of range 2:
    exp(b^2/2) minus (1-z)/2 exp(-(1+z)b) + (1+z)/2 exp((1-z)b)."""
    z = np.asarray(z, float)
    b = np.asarray(b, float)
    _check_exponent(b)
    lhs = np.exp(0.5 * b * b)
    rhs = 0.5 * (1.0 - z) * np.exp(-(1.0 + z) * b) + 0.5 * (1.0 + z) * np.exp((1.0 - z) * b)
    out = lhs - rhs
    return float(out) if out.ndim == 0 else out


def cosh_chain_check(c: float, lam: float) -> tuple[float, float]:
    """Both gaps of the exponential-vs-cosh chain at (c, lam), c >= 2, lam > 0.

    First: (e^{c lam} - 1 - c lam) - lam^2 e^{c lam / 2}, strictly positive.
    Second: lam^2/(e^{c lam} - 1 - c lam) - lam^2/(2(cosh(c lam) - 1)).
    """
    if c < 2 or lam <= 0:
        raise ValueError(f"need c >= 2 and lam > 0, got c={c}, lam={lam}")
    if c * lam > 100.0:
        raise DomainOverflowError(f"c*lam = {c * lam:.3g} exceeds 100")
    cl = c * lam
    e1 = math.expm1(cl) - cl
    e2 = 2.0 * (math.cosh(cl) - 1.0)
    gap1 = e1 - lam * lam * math.exp(0.5 * cl)
    # e2 - e1 = expm1(-cl) + cl, which avoids cancellation at large cl
    gap2 = lam * lam * (math.expm1(-cl) + cl) / (e1 * e2)
    return gap1, gap2


@dataclass(frozen=True)
class BoundInputs:
    """Sample estimates feeding the existence bound."""

    mean_max_proxy: float       # estimate of E max_i Z along basis directions
    mean_block_count: float     # estimate of the expected nontrivial step count

    def __post_init__(self):
        if not -1e-9 <= self.mean_max_proxy <= 1.0 + 1e-9:
            raise ValueError(f"mean_max_proxy out of [0,1]: {self.mean_max_proxy}")
        if self.mean_block_count < 1.0:
            raise ValueError(f"mean_block_count must be >= 1: {self.mean_block_count}")


def theorem1_bound(inputs: BoundInputs) -> float:
    """Existence bound 2 max(1, sqrt(2 E max proxy) sqrt(ln E nontrivial steps))."""
    return 2.0 * max(1.0, math.sqrt(2.0 * max(inputs.mean_max_proxy, 0.0))
                     * math.sqrt(math.log(inputs.mean_block_count)))


def lemma1_grid_min(step: float = 0.01, x_lim: float = 0.99,
                    ab_lim: float = 3.0) -> float:
    """Minimum lemma gap over the x in [-x_lim, x_lim], a,b in [-ab_lim, ab_lim] grid."""
    xs = _grid(x_lim, step)
    ab = _grid(ab_lim, step)
    a = ab[:, None]
    b = ab[None, :]
    worst = math.inf
    for x in xs:
        worst = min(worst, float(lemma1_gap(x, a, b).min()))
    return worst


def two_point_grid_min(step: float = 0.01, z_lim: float = 1.0,
                       b_lim: float = 3.0) -> float:
    """Minimum Hoeffding-step gap over the z in [-1,1], b in [-b_lim, b_lim] grid."""
    zs = _grid(z_lim, step)[:, None]
    bs = _grid(b_lim, step)[None, :]
    return float(two_point_mgf_gap(zs, bs).min())


def cosh_chain_grid_min(step: float = 0.01, c_max: float = 10.0,
                        lam_max: float = 5.0) -> tuple[float, float]:
    """Minimum of both chain gaps over c in [2, c_max], lam in (0, lam_max]."""
    worst1 = worst2 = math.inf
    cs = np.arange(2.0, c_max + step / 2, step)
    lams = np.arange(step, lam_max + step / 2, step)
    for c in cs:
        cl = c * lams
        e1 = np.expm1(cl) - cl
        e2 = 2.0 * (np.cosh(cl) - 1.0)
        g1 = e1 - lams * lams * np.exp(0.5 * cl)
        g2 = lams * lams * (np.expm1(-cl) + cl) / (e1 * e2)
        worst1 = min(worst1, float(g1.min()))
        worst2 = min(worst2, float(g2.min()))
    return worst1, worst2


def _grid(lim: float, step: float) -> np.ndarray:
    count = int(round(2 * lim / step)) + 1
    return np.linspace(-lim, lim, count)
