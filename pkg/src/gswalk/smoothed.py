"""Smoothed-analysis pipeline for Gaussian-perturbed instances.

The walk runs on the augmented matrix 2^{-1/2} (M; Id_n); its exact leaf law
is reweighted on a bounded-discrepancy cutoff set, the instance is perturbed
by Gaussian noise of entry variance sigma^2/d, and the probability that some
support point lands inside the epsilon-cube of the perturbed map is estimated
over perturbation draws.  The per-coordinate comparison factor between the
joint and product hit probabilities is evaluated in closed form against a
quadrature oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erf, ndtr

from .exceptions import ContractViolationError, DegeneratePairError
from .instances import Instance
from .enumeration import LeafDistribution

WILSON_Z = 1.959963984540054        # two-sided 95%
DEFAULT_DELTA = 0.1
DEFAULT_LOWER_C = 0.5
DEFAULT_RATIO_L = 10.0


@dataclass(frozen=True)
class SmoothedConfig:
    sigma: float
    kappa: float
    cutoff_c: float
    epsilon: float
    r_trials: int
    master_seed: int
    delta: float = DEFAULT_DELTA    # slack constant in the admissibility bounds

    def __post_init__(self):
        if self.sigma < 1 or self.kappa < 1:
            raise ValueError("sigma and kappa must be >= 1")
        if self.cutoff_c <= 1:
            raise ValueError("cutoff_c must exceed 1")
        if self.epsilon < 0 or self.r_trials < 1:
            raise ValueError("epsilon must be nonnegative and r_trials >= 1")


@dataclass
class TiltedDistribution:
    support: list[tuple[np.ndarray, float, float]]  # (signs, base_p, tilted_p)
    normalizer: float           # W
    half_variance: float        # V, with 2V the base mean of ||M x||^2
    cutoff_mass: float          # base probability of the cutoff set


@dataclass
class PerturbationSample:
    matrix: np.ndarray = field(repr=False)
    seed_index: int


def build_augmented(inst: Instance) -> Instance:
    """The (d+n) x n instance with column i equal to (v_i, e_i)/sqrt(2)."""
    stacked = np.vstack([inst.matrix, np.eye(inst.n)]) / math.sqrt(2.0)
    return Instance(stacked)


def base_law(leaves: LeafDistribution) -> list[tuple[np.ndarray, float]]:
    """Aggregate leaf probabilities over distinct sign vectors."""
    agg: dict[bytes, tuple[np.ndarray, float]] = {}
    for lf in leaves.leaves:
        key = lf.signs.astype(np.int8).tobytes()
        if key in agg:
            agg[key] = (agg[key][0], agg[key][1] + lf.probability)
        else:
            agg[key] = (lf.signs.copy(), lf.probability)
    return list(agg.values())


def tilt_distribution(leaves: LeafDistribution, inst: Instance, sigma: float,
                      cutoff_c: float) -> TiltedDistribution:
    """Reweight the augmented-walk law on the cutoff set of bounded ||M x||^2.

    Weights exp(d ||M x||^2 / (2 sigma^2 n)) restricted to
    {||M x||^2 <= 2 * cutoff_c * V} and normalized; V is exact from the leaves.
    """
    if leaves.n != inst.n:
        raise ContractViolationError("leaf law and instance disagree on n")
    law = base_law(leaves)
    d, n = inst.d, inst.n
    sq_norms = [float(np.sum((inst.matrix @ x) ** 2)) for x, _ in law]
    two_v = sum(p * s for (_, p), s in zip(law, sq_norms))
    radius = cutoff_c * two_v
    support = []
    normalizer = 0.0
    cutoff_mass = 0.0
    for (x, p), s in zip(law, sq_norms):
        if s <= radius * (1.0 + 1e-12) + 1e-300:
            weight = math.exp(d * s / (2.0 * sigma * sigma * n))
            support.append((x, p, p * weight))
            normalizer += p * weight
            cutoff_mass += p
    if normalizer <= 0.0:
        raise ContractViolationError("cutoff set carries no probability mass")
    support = [(x, p, tp / normalizer) for x, p, tp in support]
    return TiltedDistribution(support=support, normalizer=normalizer,
                              half_variance=0.5 * two_v, cutoff_mass=cutoff_mass)


def sample_perturbation(d: int, n: int, sigma: float,
                        rng: np.random.Generator,
                        seed_index: int = 0) -> PerturbationSample:
    """i.i.d. centered Gaussian d x n matrix with entry variance sigma^2/d."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return PerturbationSample(matrix=rng.normal(0.0, sigma / math.sqrt(d), (d, n)),
                              seed_index=seed_index)


def inner_hit_probability(inst: Instance, perturbation: PerturbationSample,
                          tilted: TiltedDistribution, epsilon: float) -> float:
    """Tilted mass of sign vectors with ||(M+R)x||_inf <= epsilon; exact."""
    m = inst.matrix + perturbation.matrix
    return float(sum(tp for x, _, tp in tilted.support
                     if np.abs(m @ x).max() <= epsilon))


def wilson_interval(successes: int, trials: int,
                    z: float = WILSON_Z) -> tuple[float, float]:
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return center - half, center + half


def outer_success_estimate(inst: Instance, tilted: TiltedDistribution,
                           config: SmoothedConfig):
    """Fraction of perturbation draws whose inner hit probability is positive,
    with a 95% Wilson score interval.  Deterministic given the master seed."""
    hits = 0
    for i in range(config.r_trials):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.master_seed, spawn_key=(i,)))
        pert = sample_perturbation(inst.d, inst.n, config.sigma, rng, seed_index=i)
        if inner_hit_probability(inst, pert, tilted, config.epsilon) > 0.0:
            hits += 1
    return hits / config.r_trials, wilson_interval(hits, config.r_trials)


def epsilon_of(sigma: float, d: int, kappa: float) -> float:
    """Target tolerance sigma * sqrt(ln d) * d^(-kappa/32)."""
    if d < 2:
        raise ValueError("d must be >= 2")
    return sigma * math.sqrt(math.log(d)) * d ** (-kappa / 32.0)


def _overlap(x: np.ndarray, y: np.ndarray) -> float:
    return 0.25 * float(np.sum((x + y) ** 2))


def comparison_constant(row: np.ndarray, x: np.ndarray, y: np.ndarray,
                        sigma: float, d: int, n: int, epsilon: float) -> float:
    """Closed-form factor bounding joint over product hit probabilities."""
    k = _overlap(x, y)
    if k <= 0 or k >= n:
        raise DegeneratePairError("sign vectors are equal or opposite")
    m1 = float(row @ x)
    m2 = float(row @ y)
    scale = d / (2.0 * n * sigma * sigma * max(k, n - k))
    prefactor = n / (2.0 * math.sqrt(k * (n - k)))
    tilt = math.exp(scale * abs(n - 2 * k) * (epsilon * (abs(m1) + abs(m2)) + epsilon ** 2))
    cross = math.exp(-scale * (n - 2 * k) * m1 * m2)
    return prefactor * tilt * cross


def joint_rect_probability(row: np.ndarray, x: np.ndarray, y: np.ndarray,
                           sigma: float, d: int, n: int, epsilon: float,
                           quad_points: int = 64) -> float:
    """P(|s1 g1 - (m1+m2)/2| + |s2 g2 - (m1-m2)/2| <= eps) for independent
    standard Gaussians, s1 = sigma sqrt(k/d), s2 = sigma sqrt((n-k)/d).

    Tensor Gauss-Legendre quadrature of the exact product density over the
    diamond-shaped region; the outer axis is split at its kink so each panel
    is smooth and the scheme converges spectrally.
    """
    if epsilon <= 0:
        return 0.0
    k = _overlap(x, y)
    if k <= 0 or k >= n:
        raise DegeneratePairError("sign vectors are equal or opposite")
    quad_points = max(quad_points, 64)
    m1 = float(row @ x)
    m2 = float(row @ y)
    s1 = sigma * math.sqrt(k / d)
    s2 = sigma * math.sqrt((n - k) / d)
    mu = 0.5 * (m1 + m2)
    nu = 0.5 * (m1 - m2)
    nodes, weights = leggauss(quad_points)
    # Clip each axis to the density's effective support (12 standard
    # deviations) so the fixed node count resolves the peak even when the
    # region is much wider than the density.
    reach = 12.0
    a_lo = max(-epsilon, -mu - reach * s1)
    a_hi = min(epsilon, -mu + reach * s1)
    if a_lo >= a_hi:
        return 0.0
    panels = ([(a_lo, 0.0), (0.0, a_hi)] if a_lo < 0.0 < a_hi
              else [(a_lo, a_hi)])
    total = 0.0
    for lo, hi in panels:
        a = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)          # u-offsets
        wa = 0.5 * (hi - lo) * weights
        half = epsilon - np.abs(a)                             # inner half-width
        b_lo = np.maximum(-half, -nu - reach * s2)
        b_hi = np.minimum(half, -nu + reach * s2)
        width = np.maximum(b_hi - b_lo, 0.0)
        b = 0.5 * width[:, None] * nodes[None, :] + 0.5 * (b_lo + b_hi)[:, None]
        wb = 0.5 * width[:, None] * weights[None, :]
        dens_a = np.exp(-0.5 * ((a + mu) / s1) ** 2) / (s1 * math.sqrt(2 * math.pi))
        dens_b = np.exp(-0.5 * ((b + nu) / s2) ** 2) / (s2 * math.sqrt(2 * math.pi))
        total += float(np.sum(dens_a * wa * np.sum(dens_b * wb, axis=1)))
    return min(total, 1.0)


def product_rect_probability(row: np.ndarray, x: np.ndarray, y: np.ndarray,
                             sigma: float, d: int, n: int,
                             epsilon: float) -> float:
    """Product of the two marginal interval probabilities, via the normal CDF."""
    m1 = float(row @ x)
    m2 = float(row @ y)
    s = sigma * math.sqrt(n / d)
    p1 = ndtr((epsilon + m1) / s) - ndtr((-epsilon + m1) / s)
    p2 = ndtr((epsilon + m2) / s) - ndtr((-epsilon + m2) / s)
    return float(p1 * p2)


def verify_comparison(row: np.ndarray, x: np.ndarray, y: np.ndarray,
                      sigma: float, d: int, n: int, epsilon: float,
                      quad_points: int = 64) -> float:
    """Slack C_i * product - joint; nonnegative up to relative quadrature error."""
    ci = comparison_constant(row, x, y, sigma, d, n, epsilon)
    prod = product_rect_probability(row, x, y, sigma, d, n, epsilon)
    joint = joint_rect_probability(row, x, y, sigma, d, n, epsilon, quad_points)
    return ci * prod - joint


def cube_gaussian_measure(radius: float, d: int) -> float:
    """Standard Gaussian mass of the cube [-radius, radius]^d."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return float(erf(radius / math.sqrt(2.0)) ** d)


def admissibility_report(config: SmoothedConfig, inst: Instance,
                         tilted: TiltedDistribution,
                         ratio_l: float = DEFAULT_RATIO_L,
                         lower_c: float = DEFAULT_LOWER_C) -> dict:
    """Evaluate the parameter conditions of the smoothed bound, with margins.

    A report, not a gate: every condition is returned as a named entry with
    both sides and whether it holds at the configured (sigma, kappa, cutoff_c,
    epsilon, delta).
    """
    d, n = inst.d, inst.n
    sigma, eps, delta = config.sigma, config.epsilon, config.delta
    cv = config.cutoff_c * tilted.half_variance
    conditions = []

    def add(name, lhs, rhs, sense):
        holds = lhs >= rhs if sense == ">=" else lhs <= rhs
        conditions.append({"name": name, "lhs": lhs, "rhs": rhs,
                           "sense": sense, "holds": bool(holds),
                           "margin": lhs - rhs if sense == ">=" else rhs - lhs})

    add("gaussian_cube_mass",
        cube_gaussian_measure(math.sqrt(d) * eps / (math.sqrt(n) * sigma), d),
        math.exp(-n / 32.0), ">=")
    add("second_moment_scale", float(n), 8.0 * math.sqrt(d) * math.sqrt(2.0 * cv), ">=")
    add("aspect_ratio", n / d, max(ratio_l, ratio_l / sigma ** 2, 16.0 * sigma ** 2), ">=")
    add("epsilon_upper_variance",
        eps,
        (delta / 32.0) * sigma ** 2 * (n / d) ** 1.5 / math.sqrt(cv) if cv > 0 else math.inf,
        "<=")
    add("epsilon_upper_scale",
        eps, (math.sqrt(delta) / 4.0) * sigma * (n / d) * n ** -0.25, "<=")
    add("epsilon_lower",
        eps,
        math.sqrt(math.pi / 2.0) * math.exp(lower_c ** 2 / 2.0)
        * sigma * math.sqrt(n / d) * math.exp(-n / (32.0 * d)), ">=")
    return {
        "parameters": {"d": d, "n": n, "sigma": sigma, "kappa": config.kappa,
                       "cutoff_c": config.cutoff_c, "epsilon": eps,
                       "delta": delta, "lower_c": lower_c, "ratio_l": ratio_l,
                       "half_variance": tilted.half_variance},
        "conditions": conditions,
        "all_hold": all(c["holds"] for c in conditions),
    }
