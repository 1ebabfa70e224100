"""Single runs, parameter sweeps and algorithm comparisons with file output.

Every run is a pure function of ``(cfg, algorithm, seed)``. Sweeps may
fan runs out to worker processes; results are merged in submission order
so the written files do not depend on the worker count.
"""
from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .baselines import swarm_run
from .metrics import MetricsSeries
from .nbrl import nbrl_run
from .scenario import (
    ConfigError,
    ScenarioConfig,
    allocation_accuracy,
    build_scenario,
    friis_link_ok,
    resident_assignment,
    users_handled_fraction,
)

__all__ = [
    "ALGORITHMS",
    "AXES",
    "Comparison",
    "RunResult",
    "SweepResult",
    "allocation_accuracy",
    "apply_axis",
    "compare",
    "friis_link_ok",
    "run_detailed",
    "run_scenario",
    "sweep",
    "users_handled_fraction",
    "write_run",
]

ALGORITHMS = ("nbrl", "pso", "vpso")
AXES = ("lambda", "tier1", "seed")
FINAL_METRICS = ("accuracy", "likelihood", "handled", "S_T", "accurate_count")


@dataclass
class RunResult:
    algorithm: str
    seed: int
    lam: float
    tier1: int
    series: MetricsSeries
    users: object = field(repr=False, default=None)
    assignments: dict = field(repr=False, default_factory=dict)  # tier -> assignment document

    def summary(self) -> dict:
        final = self.series.final
        return {
            "algo": self.algorithm,
            "seed": self.seed,
            "lambda": self.lam,
            "tier1": self.tier1,
            "iterations_to_converge": self.series.iterations_to_converge,
            "converged": self.series.converged,
            "handled_iter1": self.series.records[0].handled if self.series.records else 0.0,
            **{m: getattr(final, m) if final else None for m in FINAL_METRICS},
        }


def run_detailed(cfg: ScenarioConfig, algorithm: str, seed: int) -> RunResult:
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
    cfg.validate()
    scn = build_scenario(cfg, seed)
    if algorithm == "nbrl":
        state, series = nbrl_run(scn)
        fleet = state.fleet
    else:
        fleet, series, _ = swarm_run(scn, algorithm)
    snap = scn.snapshot(fleet, 0.0)
    assignments = {t: io.assignment_document(v, resident_assignment(v), snap.likelihood)
                   for t, v in snap.views.items() if t in scn.serving_tiers}
    return RunResult(algorithm, int(seed), scn.lam, cfg.tier1_count, series, scn.users, assignments)


def run_scenario(cfg: ScenarioConfig, algorithm: str, seed: int) -> MetricsSeries:
    """Build the world for ``seed``, run ``algorithm`` on it and return its metrics."""
    return run_detailed(cfg, algorithm, seed).series


def write_run(result: RunResult, out, cfg: ScenarioConfig | None = None) -> list[Path]:
    """Write every per-run artifact into ``out``."""
    out = Path(out)
    s = result.series
    files = [
        io.write_csv(out / "metrics.csv", io.METRIC_COLUMNS,
                     io.metric_rows(s, result.algorithm, result.seed, result.lam, result.tier1)),
        io.write_csv(out / "survivability.csv", io.SURVIVABILITY_COLUMNS, io.survivability_rows(s)),
        io.write_csv(out / "moves.csv", io.MOVE_COLUMNS, io.move_rows(s)),
        io.write_json(out / "assignment.json", result.assignments),
    ]
    if result.users is not None:
        files.append(io.write_users(out / "users.csv", result.users))
    if s.trace:
        files.append(io.write_csv(out / "trace.csv", io.TRACE_COLUMNS, io.trace_rows(s)))
    if s.score_history:
        files.append(io.write_csv(out / "score_history.csv", io.SCORE_COLUMNS, s.score_history))
    summary = {"run": result.summary()}
    if cfg is not None:
        summary["config"] = cfg.to_dict()
    files.append(io.write_json(out / "summary.json", summary))
    return files


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Configuration for one sweep cell. The seed axis leaves the config alone."""
    if axis == "lambda":
        return cfg.replace(lambda_min=float(value), lambda_max=float(value))
    if axis == "tier1":
        n = int(value)
        if n < 1 or n % cfg.mbs_count:
            raise ConfigError(f"tier-1 count {n} is not a positive multiple of mbs_count={cfg.mbs_count}")
        return cfg.replace(tier1_per_mbs=n // cfg.mbs_count)
    if axis == "seed":
        return cfg
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {', '.join(AXES)}")


def _stats(xs) -> dict:
    xs = [float(x) for x in xs]
    return {"mean": float(np.mean(xs)), "min": min(xs), "max": max(xs)}


@dataclass
class SweepResult:
    axis: str
    plan: list  # (value, algorithm, seed) in run order
    runs: list = field(default_factory=list)  # RunResult per completed plan entry

    @property
    def complete(self) -> bool:
        return len(self.runs) == len(self.plan)

    def cells(self) -> list:
        """Runs grouped by (value, algorithm) in plan order."""
        groups: dict = {}
        for (value, algo, _), r in zip(self.plan, self.runs):
            groups.setdefault((value, algo), []).append(r)
        return list(groups.items())

    def aggregates(self) -> list[dict]:
        rows = []
        for (value, algo), runs in self.cells():
            sums = [r.summary() for r in runs]
            row = {"axis": self.axis, "value": value, "algo": algo, "runs": len(runs)}
            for m in FINAL_METRICS + ("handled_iter1",):
                row[m] = _stats(s[m] for s in sums)
            iters = [s["iterations_to_converge"] for s in sums]
            row["iterations_to_converge"] = {**_stats(iters), "median": float(statistics.median(iters))}
            row["converged_fraction"] = sum(s["converged"] for s in sums) / len(sums)
            rows.append(row)
        return rows

    def handled_by_accurate(self) -> dict:
        """Final handled fraction grouped by the number of accurately allocated drones."""
        groups: dict = {}
        for r in self.runs:
            f = r.series.final
            if f is not None:
                groups.setdefault(f.accurate_count, []).append(f.handled)
        return {k: {"runs": len(v), **_stats(v)} for k, v in sorted(groups.items())}

    def summary(self) -> dict:
        return {
            "axis": self.axis,
            "planned_runs": len(self.plan),
            "completed_runs": len(self.runs),
            "aggregates": self.aggregates(),
            "handled_by_accurate": self.handled_by_accurate(),
        }

    def write(self, out) -> list[Path]:
        out = Path(out)
        rows = [row for r in self.runs for row in io.metric_rows(r.series, r.algorithm, r.seed, r.lam, r.tier1)]
        agg_rows = []
        for a in self.aggregates():
            agg_rows.append([a["value"], a["algo"], a["runs"], a["converged_fraction"],
                             a["iterations_to_converge"]["median"]]
                            + [a[m][k] for m in FINAL_METRICS for k in ("mean", "min", "max")])
        header = ["value", "algo", "runs", "converged_fraction", "median_iterations"] + [
            f"{m}_{k}" for m in FINAL_METRICS for k in ("mean", "min", "max")]
        return [
            io.write_csv(out / "metrics.csv", io.METRIC_COLUMNS, rows),
            io.write_csv(out / "aggregates.csv", header, agg_rows),
            io.write_json(out / "summary.json", self.summary()),
        ]


def _run_entry(args) -> RunResult:
    cfg, algo, seed = args
    r = run_detailed(cfg, algo, seed)
    # users and assignment documents are per-run artifacts only
    r.users, r.assignments = None, {}
    return r


def _execute(result: SweepResult, tasks: list, jobs: int, out) -> SweepResult:
    try:
        if jobs <= 1:
            for t in tasks:
                result.runs.append(_run_entry(t))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_entry, t) for t in tasks]
                for f in futures:
                    result.runs.append(f.result())
    except BaseException:
        if out is not None and result.runs:
            result.write(out)
        raise
    if out is not None:
        result.write(out)
    return result


def sweep(cfg: ScenarioConfig, axis: str, values, algorithms=("nbrl",), seeds: int = 20, out=None,
          jobs: int = 1) -> SweepResult:
    """One run per (value, algorithm, seed); on the seed axis each value is itself the seed.

    Writes ``metrics.csv``, ``aggregates.csv`` and ``summary.json`` when
    ``out`` is given. If a run fails, the completed runs are still written
    before the error propagates.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}")
    cfg.validate()
    plan, tasks = [], []
    for v in values:
        cell_cfg = apply_axis(cfg, axis, v)
        cell_cfg.validate()
        seed_list = [int(v)] if axis == "seed" else range(seeds)
        for algo in algorithms:
            for s in seed_list:
                plan.append((v, algo, s))
                tasks.append((cell_cfg, algo, s))
    return _execute(SweepResult(axis, plan), tasks, jobs, out)


@dataclass
class Comparison:
    summary: dict
    sweep: SweepResult


def compare(cfg: ScenarioConfig, seeds: int = 20, out=None, jobs: int = 1, algorithms=ALGORITHMS) -> Comparison:
    """Run every algorithm on the same seeds and summarize convergence speed.

    A seed counts as a win for the first algorithm when it converges in
    strictly fewer iterations than every other algorithm.
    """
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    cfg.validate()
    plan = [(s, a, s) for s in range(seeds) for a in algorithms]
    res = _execute(SweepResult("seed", plan), [(cfg, a, s) for _, a, s in plan], jobs, None)
    iters = {a: [] for a in algorithms}
    for (_, a, _), r in zip(res.plan, res.runs):
        iters[a].append(r.series.iterations_to_converge)
    lead, others = algorithms[0], algorithms[1:]
    wins = sum(all(iters[lead][k] < iters[o][k] for o in others) for k in range(seeds))
    summary = {
        "seeds": seeds,
        "iterations_to_converge": iters,
        "median_iterations": {a: float(statistics.median(v)) for a, v in iters.items()},
        "converged_fraction": {
            a: sum(r.series.converged for (_, b, _), r in zip(res.plan, res.runs) if b == a) / seeds
            for a in algorithms
        },
        "lead": lead,
        "lead_wins": wins,
        "lead_win_fraction": wins / seeds,
        "aggregates": res.aggregates(),
    }
    if out is not None:
        res.write(out)
        io.write_json(Path(out) / "summary.json", summary)
    return Comparison(summary, res)
