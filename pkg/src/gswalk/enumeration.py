"""Exact small-instance oracle.

Expands the full decision tree of the walk, one branch per endpoint choice,
multiplying branch probabilities.  Leaves carry the exact probability of each
sign outcome together with the trace and its orthogonal decomposition, so
expectations of any path functional can be computed without sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError
from .instances import Instance
from .ortho import OrthoDecomposition, decompose, variance_proxy
from .walk import StepRecord, WalkState, WalkTrace, apply_step, resolve_step

DEFAULT_PRUNE_TOL = 1e-15
DEFAULT_DEPTH_CAP = 16
MGF_EXP_LIMIT = 600.0


@dataclass
class Leaf:
    signs: np.ndarray
    probability: float
    trace: WalkTrace
    ortho: OrthoDecomposition
    choices: tuple[bool, ...]       # True where the + endpoint was taken


@dataclass
class LeafDistribution:
    leaves: list[Leaf]
    d: int
    n: int
    pruned_mass: float = 0.0


def enumerate_walk(inst: Instance, prune_tol: float = DEFAULT_PRUNE_TOL,
                   depth_cap: int = DEFAULT_DEPTH_CAP) -> LeafDistribution:
    """All walk outcomes with exact probabilities; + branch expanded first."""
    if inst.n > depth_cap:
        raise DimensionError(
            f"enumeration refused: n={inst.n} exceeds depth cap {depth_cap} "
            f"(up to 2^n leaves)")
    leaves: list[Leaf] = []
    pruned = 0.0

    def expand(state: WalkState, records: list[StepRecord], prob: float,
               choices: tuple[bool, ...]):
        nonlocal pruned
        if state.active.size == 0:
            trace = WalkTrace(steps=list(records), final_x=state.x,
                              total_steps=len(records))
            leaves.append(Leaf(signs=state.x.copy(), probability=prob,
                               trace=trace, ortho=decompose(inst, trace),
                               choices=choices))
            return
        u, dm, dp = resolve_step(inst, state.x, state.active, state.pivot)
        p_plus = dm / (dm + dp)
        for take_plus in (True, False):
            p_branch = prob * (p_plus if take_plus else 1.0 - p_plus)
            if p_branch < prune_tol:
                pruned += p_branch
                continue
            chosen = dp if take_plus else -dm
            branch_prob = p_plus if take_plus else 1.0 - p_plus
            new_state, rec = apply_step(state, u, chosen, dm, dp, branch_prob)
            expand(new_state, records + [rec], p_branch, choices + (take_plus,))

    expand(WalkState.initial(inst.n), [], 1.0, ())
    dist = LeafDistribution(leaves=leaves, d=inst.d, n=inst.n, pruned_mass=pruned)
    return dist


def exact_expectation(dist: LeafDistribution, f) -> float:
    """Sum of p(leaf) * f(leaf), accumulated in decreasing-probability order."""
    ordered = sorted(dist.leaves, key=lambda lf: -lf.probability)
    return float(sum(lf.probability * f(lf) for lf in ordered))


def verify_martingale(dist: LeafDistribution, inst: Instance, v) -> float:
    """|E <M X, v>| over the exact leaf law; zero for the mean-zero walk."""
    v = np.asarray(v, float)
    return abs(exact_expectation(dist, lambda lf: float(inst.matrix @ lf.signs @ v)))


def verify_subgaussian(dist: LeafDistribution, inst: Instance, v,
                       lam: float) -> float:
    """E exp(lam <M X, v> - lam^2 Z/2) with each leaf's own proxy Z."""
    v = np.asarray(v, float)

    def moment(lf: Leaf) -> float:
        z = variance_proxy(inst, lf.ortho, v)
        arg = lam * float(inst.matrix @ lf.signs @ v) - 0.5 * lam * lam * z
        if abs(arg) > MGF_EXP_LIMIT:
            raise OverflowError(f"mgf exponent {arg:.3g} out of range")
        return math.exp(arg)

    return exact_expectation(dist, moment)


def conditional_increment_check(dist: LeafDistribution) -> float:
    """Max deviation of node-level pivot movement laws from the two-point form.

    At every internal node the pivot's remaining total movement must equal
    +1-z or -1-z (z its current fractional value) with probabilities (1+z)/2
    and (1-z)/2; both the probability masses and the conditional mean are
    checked.
    """
    groups: dict[tuple[bool, ...], list[Leaf]] = {}
    for lf in dist.leaves:
        for depth in range(len(lf.choices)):
            groups.setdefault(lf.choices[:depth], []).append(lf)
    worst = 0.0
    for prefix, members in groups.items():
        depth = len(prefix)
        rep = members[0].trace
        x = np.zeros(dist.n)
        for rec in rep.steps[:depth]:
            x = x + rec.chosen_delta * rec.u
        pivot = rep.steps[depth].pivot
        z = float(x[pivot])
        total = sum(lf.probability for lf in members)
        plus = sum(lf.probability for lf in members if lf.signs[pivot] > 0)
        p_plus = plus / total
        worst = max(worst, abs(p_plus - (1.0 + z) / 2.0))
        mean_move = p_plus * (1.0 - z) + (1.0 - p_plus) * (-1.0 - z)
        worst = max(worst, abs(mean_move))
    return worst


def brute_force_min_discrepancy(inst: Instance) -> tuple[float, np.ndarray]:
    """Minimum over all 2^n sign vectors of ||M x||_inf, with the
    lexicographically smallest minimizer (-1 before +1)."""
    n = inst.n
    if n > 20:
        raise DimensionError(f"brute force refused for n={n} > 20")
    best_val = math.inf
    best_idx = -1
    shifts = n - 1 - np.arange(n)       # coordinate 0 is the most significant bit
    chunk = 1 << 14
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, min(start + chunk, 1 << n))
        signs = (((idx[:, None] >> shifts[None, :]) & 1) * 2 - 1).astype(float)
        disc = np.abs(inst.matrix @ signs.T).max(axis=0)
        j = int(disc.argmin())
        # ties resolve to the smallest index, which is the lexicographic minimum
        if disc[j] < best_val - 0.0:
            best_val = float(disc[j])
            best_idx = int(idx[j])
    signs = ((best_idx >> shifts) & 1) * 2.0 - 1.0
    return best_val, signs
