"""The randomized balancing walk.

Starting from the all-zero fractional coloring, each step picks the
largest-index active coordinate as pivot, moves along the column-cancelling
direction of minimum residual norm, and steps to one endpoint of the feasible
interval with the mean-zero choice of probabilities.  Coordinates reaching
+-1 are snapped exactly and frozen.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolationError
from .instances import Instance

FREEZE_TOL = 1e-9
RANK_RCOND = 1e-10


@dataclass
class WalkState:
    t: int
    x: np.ndarray
    active: np.ndarray          # sorted array of active indices
    pivot: int | None

    @classmethod
    def initial(cls, n: int) -> "WalkState":
        return cls(t=1, x=np.zeros(n), active=np.arange(n), pivot=n - 1)


@dataclass
class StepRecord:
    t: int
    pivot: int
    u: np.ndarray = field(repr=False)
    delta_plus: float
    delta_minus: float
    chosen_delta: float
    choice_probability: float
    frozen: list[int]           # decreasing index order


@dataclass
class WalkTrace:
    steps: list[StepRecord]
    final_x: np.ndarray
    total_steps: int

    def replay(self) -> np.ndarray:
        x = np.zeros(len(self.final_x))
        for rec in self.steps:
            x = x + rec.chosen_delta * rec.u
        return x


def min_norm_direction(inst: Instance, active, pivot: int) -> np.ndarray:
    """Direction with u[pivot] = 1 and support in ``active`` minimizing ||M u||_2.

    Coefficients on the non-pivot active columns solve a least-squares problem;
    under rank deficiency the minimum-norm solution is taken (SVD cutoff
    ``RANK_RCOND`` relative to the top singular value), which makes the result
    a pure function of the inputs.
    """
    active = np.asarray(active)
    u = np.zeros(inst.n)
    u[pivot] = 1.0
    others = active[active != pivot]
    if others.size:
        a = inst.matrix[:, others]
        coef, *_ = np.linalg.lstsq(a, -inst.matrix[:, pivot], rcond=RANK_RCOND)
        u[others] = coef
    return u


def feasible_interval(x: np.ndarray, u: np.ndarray) -> tuple[float, float]:
    """Largest move sizes along -u and +u keeping x + delta*u inside [-1,1]^n.

    Returns ``(delta_minus, delta_plus)``, both strictly positive.
    """
    support = np.nonzero(u)[0]
    xs = x[support]
    if np.any(np.abs(xs) >= 1.0):
        raise ContractViolationError("direction touches a frozen coordinate")
    us = u[support]
    lo_ends = (-1.0 - xs) / us
    hi_ends = (1.0 - xs) / us
    lows = np.minimum(lo_ends, hi_ends)
    highs = np.maximum(lo_ends, hi_ends)
    lo = float(lows.max())
    hi = float(highs.min())
    if not (lo < 0.0 < hi):
        raise ContractViolationError(f"feasible interval [{lo}, {hi}] does not contain 0")
    return -lo, hi


def resolve_step(inst: Instance, x: np.ndarray, active, pivot: int):
    """Deterministic part of one step: direction and endpoint magnitudes."""
    u = min_norm_direction(inst, active, pivot)
    delta_minus, delta_plus = feasible_interval(x, u)
    return u, delta_minus, delta_plus


def apply_step(state: WalkState, u: np.ndarray, chosen_delta: float,
               delta_minus: float, delta_plus: float,
               choice_probability: float) -> tuple[WalkState, StepRecord]:
    """Move the state along u, snap and freeze boundary coordinates."""
    x = state.x + chosen_delta * u
    hit = np.abs(x) >= 1.0 - FREEZE_TOL
    x[hit] = np.sign(x[hit])
    frozen = [int(i) for i in state.active if hit[i]]
    if not frozen:
        raise ContractViolationError("step froze no coordinate")
    frozen.sort(reverse=True)
    active = state.active[~hit[state.active]]
    pivot = int(active[-1]) if active.size else None
    rec = StepRecord(t=state.t, pivot=state.pivot, u=u,
                     delta_plus=delta_plus, delta_minus=delta_minus,
                     chosen_delta=chosen_delta,
                     choice_probability=choice_probability, frozen=frozen)
    new_state = WalkState(t=state.t + 1, x=x, active=active, pivot=pivot)
    return new_state, rec


def walk_step(inst: Instance, state: WalkState, rng: np.random.Generator):
    """One randomized step: move to delta_plus with prob dm/(dm+dp), else -delta_minus."""
    if state.active.size == 0:
        raise ContractViolationError("walk_step called with empty active set")
    u, dm, dp = resolve_step(inst, state.x, state.active, state.pivot)
    p_plus = dm / (dm + dp)
    if rng.random() < p_plus:
        chosen, prob = dp, p_plus
    else:
        chosen, prob = -dm, dp / (dm + dp)
    return apply_step(state, u, chosen, dm, dp, prob)


def run_walk(inst: Instance, rng: np.random.Generator) -> WalkTrace:
    """Run the walk to completion; terminates in at most n steps."""
    state = WalkState.initial(inst.n)
    steps: list[StepRecord] = []
    while state.active.size:
        state, rec = walk_step(inst, state, rng)
        steps.append(rec)
    return WalkTrace(steps=steps, final_x=state.x, total_steps=len(steps))
