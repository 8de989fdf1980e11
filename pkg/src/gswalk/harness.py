"""Seeded Monte Carlo experiments over walk runs.

Each run draws its generator from (master_seed, run_index), so results are
identical regardless of execution order or worker count.  The per-run CSV is
the canonical record; the JSON report aggregates it.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .enumeration import brute_force_min_discrepancy
from .inequalities import BoundInputs, theorem1_bound
from .instances import Instance
from .ortho import basis_variance_proxies, decompose
from .walk import run_walk

DEFAULT_TAIL_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass
class RunStats:
    run_index: int
    discrepancy: float
    block_count: int                 # nontrivial orthogonal blocks of the run
    max_proxy: float                 # max over basis directions
    proxies: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)


@dataclass
class ExperimentReport:
    instance: dict
    runs: int
    master_seed: int
    mean_hatT: float
    se_hatT: float
    mean_maxZ: float
    se_maxZ: float
    theorem1_bound: float
    min_disc: float
    mean_disc: float
    max_disc: float
    frac_within_bound: float
    brute_force_opt: float | None
    tail: list[dict]


def _run_one(inst: Instance, master_seed: int, run_index: int) -> RunStats:
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,)))
    trace = run_walk(inst, rng)
    ortho = decompose(inst, trace)
    proxies = basis_variance_proxies(inst, ortho)
    disc = float(np.abs(inst.matrix @ trace.final_x).max())
    return RunStats(run_index=run_index, discrepancy=disc,
                    block_count=ortho.total_nontrivial,
                    max_proxy=float(proxies.max()), proxies=proxies,
                    signs=trace.final_x.copy())


def _run_range(args):
    inst, master_seed, start, stop = args
    return [_run_one(inst, master_seed, r) for r in range(start, stop)]


def run_experiment(inst: Instance, runs: int, master_seed: int,
                   workers: int = 1) -> list[RunStats]:
    """Independent walk runs with per-run derived generators, sorted by index."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if workers <= 1 or runs < 4 * workers:
        return [_run_one(inst, master_seed, r) for r in range(runs)]
    bounds = np.linspace(0, runs, workers + 1).astype(int)
    chunks = [(inst, master_seed, int(a), int(b))
              for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_range, chunks))
    out = [s for part in parts for s in part]
    out.sort(key=lambda s: s.run_index)
    return out


def estimate_bound(stats: list[RunStats]) -> tuple[float, bool]:
    """Plug sample means into the existence bound; existence holds when the
    minimum observed discrepancy does not exceed it."""
    if not stats:
        raise ValueError("no run statistics")
    mean_max = float(np.mean([s.max_proxy for s in stats]))
    mean_blocks = float(np.mean([s.block_count for s in stats]))
    bound = theorem1_bound(BoundInputs(mean_max_proxy=min(mean_max, 1.0),
                                       mean_block_count=max(mean_blocks, 1.0)))
    return bound, min(s.discrepancy for s in stats) <= bound


def empirical_tail(inst: Instance, stats: list[RunStats], coord: int,
                   c_grid) -> list[dict]:
    """Exceedance fractions of |<M X, e_coord>| against the 2 exp(-c^2/2) bound."""
    margins = np.abs(np.array([float(inst.matrix[coord] @ s.signs) for s in stats]))
    return [{"c": float(c),
             "empirical": float(np.mean(margins > c)),
             "bound": 2.0 * math.exp(-c * c / 2.0)} for c in c_grid]


def write_report(report: ExperimentReport, path, fmt: str = "json",
                 stats: list[RunStats] | None = None) -> None:
    """Write the aggregate JSON report or the per-run CSV (requires stats)."""
    if fmt == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report_to_json(report))
    elif fmt == "csv":
        if stats is None:
            raise ValueError("csv format needs the per-run statistics")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(stats_to_csv(stats))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def report_to_json(report: ExperimentReport) -> str:
    payload = {
        "instance": report.instance,
        "runs": report.runs,
        "master_seed": report.master_seed,
        "mean_hatT": report.mean_hatT,
        "se_hatT": report.se_hatT,
        "mean_maxZ": report.mean_maxZ,
        "se_maxZ": report.se_maxZ,
        "theorem1_bound": report.theorem1_bound,
        "min_disc": report.min_disc,
        "mean_disc": report.mean_disc,
        "max_disc": report.max_disc,
        "frac_within_bound": report.frac_within_bound,
        "brute_force_opt": report.brute_force_opt,
        "tail": report.tail,
    }
    return json.dumps(payload, indent=2) + "\n"


def stats_to_csv(stats: list[RunStats]) -> str:
    buf = io.StringIO()
    buf.write("run_index,discrepancy,hatT,maxZ,final_X\n")
    for s in stats:
        signs = "".join("+1" if v > 0 else "-1" for v in s.signs)
        buf.write(f"{s.run_index},{s.discrepancy!r},{s.block_count},"
                  f"{s.max_proxy!r},{signs}\n")
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    rows = []
    lines = text.strip().splitlines()
    for line in lines[1:]:
        idx, disc, blocks, maxz, signs = line.split(",")
        rows.append({"run_index": int(idx), "discrepancy": float(disc),
                     "hatT": int(blocks), "maxZ": float(maxz),
                     "final_X": signs})
    return rows


def build_report(inst: Instance, instance_desc: dict, stats: list[RunStats],
                 master_seed: int, tail_coord: int = 0,
                 tail_grid=DEFAULT_TAIL_GRID) -> ExperimentReport:
    """Aggregate per-run statistics into the report structure."""
    blocks = np.array([s.block_count for s in stats], dtype=float)
    maxz = np.array([s.max_proxy for s in stats])
    disc = np.array([s.discrepancy for s in stats])
    runs = len(stats)
    bound, _ = estimate_bound(stats)
    tail = empirical_tail(inst, stats, tail_coord, tail_grid)
    opt = None
    if inst.n <= 20:
        opt = brute_force_min_discrepancy(inst)[0]
    return ExperimentReport(
        instance=instance_desc, runs=runs, master_seed=master_seed,
        mean_hatT=float(blocks.mean()),
        se_hatT=float(blocks.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0,
        mean_maxZ=float(maxz.mean()),
        se_maxZ=float(maxz.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0,
        theorem1_bound=bound,
        min_disc=float(disc.min()), mean_disc=float(disc.mean()),
        max_disc=float(disc.max()),
        frac_within_bound=float(np.mean(disc <= bound)),
        brute_force_opt=opt, tail=tail)
