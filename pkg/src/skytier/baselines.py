"""Particle swarm baselines on the placement objective.

``pso_optimize`` is the canonical constriction-coefficient swarm;
``vpso_optimize`` additionally stretches each particle's velocity by its
normalized distance to the global best so far-away particles travel faster.
Both minimize. The placement wrapper searches over the ground positions
of every serving-tier drone and minimizes ``1 - likelihood``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .metrics import IterationRecord, MetricsSeries
from .mobility import plan_waypoints
from .scenario import Scenario

INERTIA = 0.729
COGNITIVE = 1.494
SOCIAL = 1.494


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_score: float


@dataclass
class SwarmResult:
    best_position: np.ndarray
    best_score: float
    history: list = field(default_factory=list)  # (iter, best_score, mean_score); iter 0 is the initial swarm
    iterations_to_converge: int = 0
    converged: bool = False
    particles: list = field(default_factory=list, repr=False)


def _swarm(
    objective: Callable[[np.ndarray], float],
    bounds,
    swarm_size: int,
    iterations: int,
    seed,
    target: float | None,
    distance_scaling: bool,
    w: float,
    c1: float,
    c2: float,
    v_clamp,
    init,
    init_velocity,
    on_iteration,
) -> SwarmResult:
    if swarm_size < 1 or iterations < 1:
        raise ValueError("swarm_size and iterations must be >= 1")
    lo, hi = (np.asarray(b, dtype=float).ravel() for b in bounds)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise ValueError("bounds must be two equal-length arrays with lo <= hi")
    dim = lo.size
    span = hi - lo
    vmax = span if v_clamp is None else np.broadcast_to(np.asarray(v_clamp, dtype=float), (dim,))
    d_max = float(np.linalg.norm(span)) or 1.0
    rng = np.random.default_rng(seed)

    x = rng.uniform(lo, hi, (swarm_size, dim))
    if init is not None:
        seeded = np.atleast_2d(np.asarray(init, dtype=float))
        x[: len(seeded)] = np.clip(seeded[:swarm_size], lo, hi)
    if init_velocity is None:
        v = (rng.uniform(lo, hi, (swarm_size, dim)) - x) / 2.0
    else:
        v = np.broadcast_to(np.asarray(init_velocity, dtype=float), x.shape).copy()
    v = np.clip(v, -vmax, vmax)
    scores = np.array([objective(p) for p in x])
    pbest, pscore = x.copy(), scores.copy()
    g = int(np.argmin(pscore))
    history = [(0, float(pscore[g]), float(scores.mean()))]
    if on_iteration is not None:
        on_iteration(0, pbest[g].copy(), float(pscore[g]))
    converged_at = 0
    for it in range(1, iterations + 1):
        r1 = rng.uniform(size=x.shape)
        r2 = rng.uniform(size=x.shape)
        v = w * v + c1 * r1 * (pbest - x) + c2 * r2 * (pbest[g] - x)
        if distance_scaling:
            dist = np.linalg.norm(x - pbest[g], axis=1)
            v *= (1.0 + dist / d_max)[:, None]
        v = np.clip(v, -vmax, vmax)
        x = x + v
        out = (x < lo) | (x > hi)
        x = np.clip(x, lo, hi)
        v[out] = 0.0
        scores = np.array([objective(p) for p in x])
        better = scores < pscore
        pbest[better], pscore[better] = x[better], scores[better]
        g = int(np.argmin(pscore))
        history.append((it, float(pscore[g]), float(scores.mean())))
        if on_iteration is not None:
            on_iteration(it, pbest[g].copy(), float(pscore[g]))
        if target is not None and pscore[g] <= target:
            converged_at = it
            break
    particles = [Particle(x[k].copy(), v[k].copy(), pbest[k].copy(), float(pscore[k])) for k in range(swarm_size)]
    return SwarmResult(
        best_position=pbest[g].copy(),
        best_score=float(pscore[g]),
        history=history,
        iterations_to_converge=converged_at or iterations,
        converged=bool(converged_at),
        particles=particles,
    )


def pso_optimize(objective, bounds, swarm_size: int = 30, iterations: int = 200, seed=None, *, target=None,
                 w=INERTIA, c1=COGNITIVE, c2=SOCIAL, v_clamp=None, init=None, init_velocity=None,
                 on_iteration=None) -> SwarmResult:
    """Minimize ``objective`` over the box ``bounds = (lo, hi)``.

    Stops early after the first update that brings the global best to
    ``target`` or below; that update's index is ``iterations_to_converge``
    (the cap when never reached). ``v_clamp`` bounds each velocity
    component (default: the box width). ``init`` seeds the first particles'
    positions and ``init_velocity`` overrides the random initial velocity.
    """
    return _swarm(objective, bounds, swarm_size, iterations, seed, target, False, w, c1, c2, v_clamp, init,
                  init_velocity, on_iteration)


def vpso_optimize(objective, bounds, swarm_size: int = 30, iterations: int = 200, seed=None, *, target=None,
                  w=INERTIA, c1=COGNITIVE, c2=SOCIAL, v_clamp=None, init=None, init_velocity=None,
                  on_iteration=None) -> SwarmResult:
    """As :func:`pso_optimize`, with velocity scaled by ``1 + d/d_max`` before each move.

    ``d`` is the particle's distance to the global best and ``d_max`` the
    diagonal of the search box.
    """
    return _swarm(objective, bounds, swarm_size, iterations, seed, target, True, w, c1, c2, v_clamp, init,
                  init_velocity, on_iteration)


OPTIMIZERS = {"pso": pso_optimize, "vpso": vpso_optimize}


class PlacementObjective:
    """``1 - likelihood`` of the fleet with serving-tier drones at the given flat positions."""

    def __init__(self, scenario: Scenario, fleet: dict | None = None):
        self.scenario = scenario
        self.fleet = scenario.initial_fleet() if fleet is None else fleet
        self.movable = [d for t in scenario.serving_tiers for d in self.fleet[t]]
        side = scenario.cfg.area_side
        self.bounds = (np.zeros(2 * len(self.movable)), np.full(2 * len(self.movable), side))
        self.evaluations = 0

    def place(self, x: np.ndarray) -> dict:
        for d, (px, py) in zip(self.movable, np.asarray(x, dtype=float).reshape(-1, 2)):
            d.position = (float(px), float(py))
        return self.fleet

    def initial(self) -> np.ndarray:
        return np.array([c for d in self.movable for c in d.position])

    def __call__(self, x: np.ndarray) -> float:
        self.evaluations += 1
        return 1.0 - self.scenario.likelihood(self.place(x))


def swarm_run(scenario: Scenario, variant: str = "pso", seed=None) -> tuple[dict, MetricsSeries, SwarmResult]:
    """Run a swarm baseline on ``scenario`` and record the same metrics as the recursive loop.

    Records describe the global-best placement, with likelihood taken from
    the swarm's own best score. Between iterations the fleet is charged for
    flying from the previous best placement to the new one at ``v_max``.
    """
    if variant not in OPTIMIZERS:
        raise ValueError(f"unknown swarm variant {variant!r}")
    cfg = scenario.cfg
    model = cfg.resource_model
    fleet = scenario.initial_fleet()
    objective = PlacementObjective(scenario, fleet)
    series = MetricsSeries(layers={d.id: t for t, ds in fleet.items() for d in ds})
    state = {"t": 0.0, "prev": objective.initial().reshape(-1, 2)}

    def record(it: int, best_x: np.ndarray, best_score: float) -> None:
        new = np.asarray(best_x).reshape(-1, 2)
        hop = float(np.max(np.hypot(*(new - state["prev"]).T), initial=0.0))
        duration = max(cfg.dt, math.ceil(hop / (cfg.v_max * cfg.dt)) * cfg.dt)
        if it > 0:
            for d, a, b in zip(objective.movable, state["prev"], new):
                plan = plan_waypoints((*a, d.altitude), (*b, d.altitude), cfg.v_max, cfg.dt, t0=state["t"],
                                      drone_id=d.id)
                series.moves.append(plan.hold_until(state["t"] + duration, cfg.dt))
        objective.place(best_x)
        arrived = scenario.snapshot(fleet, state["t"] + duration)
        admitted = {k: float(scenario.users.requests[c.active_users].sum())
                    for v in arrived.views.values() for k, c in v.censuses.items()}
        for ds in fleet.values():
            for d in ds:
                d.resources = model.deplete(d.resources, duration, admitted.get(d.id, 0.0))
        state["t"] += duration
        state["prev"] = new
        if it == 0:
            return
        snap = scenario.snapshot(fleet, state["t"])
        series.survivability.append(snap.survivability)
        series.records.append(IterationRecord(it, 1.0 - best_score, snap.accuracy, snap.handled, snap.coverage,
                                              snap.S_T, snap.likelihood, len(snap.accurate_ids)))

    swarm_seed = np.random.default_rng(scenario.rng_seed if seed is None else seed)
    result = OPTIMIZERS[variant](
        objective,
        objective.bounds,
        swarm_size=cfg.swarm_size,
        iterations=cfg.swarm_iterations,
        seed=swarm_seed,
        target=cfg.tolerance,
        on_iteration=record,
    )
    objective.place(result.best_position)
    series.score_history = list(result.history)
    series.converged = result.converged
    series.iterations_to_converge = result.iterations_to_converge
    return fleet, series, result
