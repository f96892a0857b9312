"""Sharer-count sweeps with seeded repetitions and cross-run statistics.

A sweep fixes the agent count and repeats, for every requested number of
sharing agents, a set of independent seeded runs. Domain parameters are
drawn once per run and reused across all sharer counts in that run
(paired comparisons), so curves for different counts differ only in the
role split. Aggregation is deliberately dumb downstream: everything the
output files need is computed here.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .domains import sample_domain_params
from .engine import (
    DEFECTOR,
    SHARER,
    CeConfig,
    RunTrace,
    domain_rng,
    make_population,
    run_cedos,
    spawn_agent_rngs,
)


@dataclass(frozen=True)
class SweepResult:
    """All traces of one sweep, keyed by ``(run, sharer_count)``."""

    domain_kind: str
    n: int
    sharer_counts: tuple[int, ...]
    runs: int
    n_iter: int
    traces: dict[tuple[int, int], RunTrace]


@dataclass(frozen=True)
class CurvePoint:
    """Cross-run statistics of one (sharer count, iteration) cell."""

    k: int
    iteration: int
    utility_mean: float
    utility_lo: float
    utility_hi: float
    share_mean: float
    share_lo: float
    share_hi: float


@dataclass(frozen=True)
class SchellingRow:
    """Final mean utility of one role at one sharer count, with CI."""

    k: int
    role: str
    mean_utility: float
    ci_lo: float
    ci_hi: float


def confidence_interval(samples, level: float = 0.95) -> tuple[float, float, float]:
    """Normal-approximation interval ``mean +- z * s / sqrt(R)``.

    ``s`` is the sample standard deviation and ``z`` is 1.96 at the
    default 0.95 level. Fewer than two samples give the degenerate
    interval ``(mean, mean, mean)``.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("confidence_interval needs at least one sample")
    mean = float(x.mean())
    if x.size < 2:
        return mean, mean, mean
    z = 1.96 if level == 0.95 else float(norm.ppf(0.5 + level / 2.0))
    half = z * float(x.std(ddof=1)) / float(np.sqrt(x.size))
    return mean, mean - half, mean + half


def _run_cell(args):
    """One (run, sharer count) cell; module-level so worker pools can pickle it."""
    domain, domain_kind, n, k, cfg, master_seed, run_index = args
    pop = make_population(domain, n, k, cfg)
    trace, _ = run_cedos(pop, cfg, spawn_agent_rngs(master_seed, run_index, n))
    return run_index, k, trace


def run_sweep(
    domain_kind: str,
    n: int,
    sharer_counts,
    runs: int,
    cfg: CeConfig,
    master_seed: int,
    workers: int = 1,
    on_iteration=None,
) -> SweepResult:
    """Execute every (run, sharer count) cell and collect the traces.

    ``workers > 1`` fans the cells out over a process pool; results are
    keyed by their cell, so scheduling cannot affect the outcome.
    ``on_iteration(run, k, t, batch, policies)`` is only supported
    serially.
    """
    ks = tuple(int(k) for k in sharer_counts)
    if len(set(ks)) != len(ks):
        raise ValueError(f"duplicate sharer counts in {ks}")
    for k in ks:
        if not 0 <= k <= n:
            raise ValueError(f"sharer count {k} outside [0, {n}]")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if on_iteration is not None and workers > 1:
        raise ValueError("iteration hooks require serial execution")

    domains = {r: sample_domain_params(domain_kind, n, domain_rng(master_seed, r)) for r in range(runs)}
    jobs = [(domains[r], domain_kind, n, k, cfg, master_seed, r) for r in range(runs) for k in ks]

    traces: dict[tuple[int, int], RunTrace] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for r, k, trace in pool.map(_run_cell, jobs):
                traces[(r, k)] = trace
    else:
        for job in jobs:
            domain, _, _, k, _, _, r = job
            if on_iteration is not None:
                pop = make_population(domain, n, k, cfg)
                hook = lambda t, batch, policies, r=r, k=k: on_iteration(r, k, t, batch, policies)
                trace, _ = run_cedos(pop, cfg, spawn_agent_rngs(master_seed, r, n), on_iteration=hook)
                traces[(r, k)] = trace
            else:
                r, k, trace = _run_cell(job)
                traces[(r, k)] = trace

    return SweepResult(domain_kind=domain_kind, n=n, sharer_counts=ks, runs=runs,
                       n_iter=cfg.n_iter, traces=traces)


def curve_statistics(result: SweepResult, level: float = 0.95) -> list[CurvePoint]:
    """Cross-run mean and CI of global utility and mean share per cell."""
    points = []
    for k in sorted(result.sharer_counts):
        utility = np.stack([result.traces[(r, k)].global_utility for r in range(result.runs)])
        share = np.stack([result.traces[(r, k)].mean_share for r in range(result.runs)])
        for t in range(result.n_iter):
            u_mean, u_lo, u_hi = confidence_interval(utility[:, t], level)
            s_mean, s_lo, s_hi = confidence_interval(share[:, t], level)
            points.append(CurvePoint(k, t, u_mean, u_lo, u_hi, s_mean, s_lo, s_hi))
    return points


def schelling_points(result: SweepResult, level: float = 0.95) -> list[SchellingRow]:
    """Final mean utility of sharers and defectors per sharer count.

    Per run, agents' final-iteration mean utilities are averaged within
    each role; the rows carry the across-run mean and CI. A role with no
    members at some count contributes no row there.
    """
    rows = []
    for k in sorted(result.sharer_counts):
        groups = []
        if k >= 1:
            groups.append((SHARER, slice(0, k)))
        if k <= result.n - 1:
            groups.append((DEFECTOR, slice(k, result.n)))
        for role, cols in sorted(groups):
            per_run = [
                float(result.traces[(r, k)].per_agent_mean_utility[-1, cols].mean())
                for r in range(result.runs)
            ]
            mean, lo, hi = confidence_interval(per_run, level)
            rows.append(SchellingRow(k=k, role=role, mean_utility=mean, ci_lo=lo, ci_hi=hi))
    return rows


def sweep_workers() -> int:
    """Worker-pool size, capped by the DOS_LAB_THREADS environment variable."""
    raw = os.environ.get("DOS_LAB_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError as err:
        raise ValueError(f"DOS_LAB_THREADS must be an integer, got {raw!r}") from err
    return max(1, workers)
