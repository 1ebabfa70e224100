"""Recursive tier-by-tier placement loop.

Each iteration walks the tiers from the lowest (N) up to 1. For every tier
it re-partitions the area around the drones, matches drones to the demand
zones they observe, steers each matched drone to the demand centroid of its
zone, and repairs same-tier footprint overlaps along the way. The whole
fleet is then scored; when the drones already sit in the zones an optimal
matching would give them the loop stops, otherwise the worst-placed drones
are reshuffled towards poorly served dense zones.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .coverage import (
    apply_placement_error,
    assign_drones,
    centroidal_step,
    likelihood_ratio,
    optimal_pairs,
    optimal_score,
)
from .demand import DemandClass
from .drones import Drone
from .geometry import Point2, aabb_overlap
from .metrics import IterationRecord, MetricsSeries, TraceRow
from .mobility import MovePlan, enforce_separation, plan_waypoints
from .scenario import Scenario, Snapshot

log = logging.getLogger(__name__)

@dataclass(frozen=True)
class NbrlConfig:
    tolerance: float = 0.05
    max_iterations: int = 100
    reshuffle_fraction: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.tolerance < 1.0:
            raise ValueError("tolerance must be in [0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.reshuffle_fraction <= 1.0:
            raise ValueError("reshuffle_fraction must be in (0, 1]")

    @classmethod
    def from_scenario(cls, cfg) -> "NbrlConfig":
        return cls(cfg.tolerance, cfg.max_iterations, cfg.reshuffle_fraction)


@dataclass
class NbrlState:
    iteration: int
    fleet: dict  # tier -> list[Drone]
    time: float
    snapshot: Snapshot
    best_fleet: dict
    best: Snapshot
    converged: bool = False
    moves: list = field(default_factory=list)  # MovePlans of the last iteration

    @property
    def likelihood(self) -> float:
        return self.best.likelihood

    @property
    def cells(self) -> dict:
        return {t: v.observed_cells for t, v in self.snapshot.views.items()}

    @property
    def survivability_report(self):
        return self.snapshot.survivability


def _copy_fleet(fleet: dict) -> dict:
    return {t: [d.copy() for d in ds] for t, ds in fleet.items()}


def initial_state(scenario: Scenario) -> NbrlState:
    fleet = scenario.initial_fleet()
    snap = scenario.snapshot(fleet, 0.0)
    return NbrlState(0, fleet, 0.0, snap, _copy_fleet(fleet), snap)


def _fly(scenario: Scenario, drones: list, targets: dict, tier: int, t0: float) -> tuple[list, float]:
    """Plan moves to ``targets``, repair overlaps, relocate drones. Returns plans and duration."""
    cfg = scenario.cfg
    plans = [
        plan_waypoints((*d.position, d.altitude), (*targets.get(d.id, d.position), d.altitude), cfg.v_max, cfg.dt,
                       t0=t0, drone_id=d.id)
        for d in drones
    ]
    t_end = max(p.final.time for p in plans)
    plans = [p.hold_until(t_end, cfg.dt) for p in plans]
    plans = enforce_separation(plans, {d.id: d.footprint for d in drones}, tier, zone_area=scenario.bounds.area)
    for d, p in zip(drones, plans):
        d.position = tuple(map(float, p.final.position))
    return plans, t_end - t0


def _deplete(scenario: Scenario, fleet: dict, duration: float, admitted: dict | None = None) -> None:
    if duration <= 0:
        return
    model = scenario.cfg.resource_model
    for ds in fleet.values():
        for d in ds:
            d.resources = model.deplete(d.resources, duration, (admitted or {}).get(d.id, 0.0))


def _target(scenario: Scenario, d: Drone, goal, rng) -> tuple:
    cfg = scenario.cfg
    if math.hypot(goal[0] - d.position[0], goal[1] - d.position[1]) <= cfg.move_deadband:
        return d.position
    p = apply_placement_error(goal, cfg.placement_error, rng)
    hi = cfg.area_side
    return (min(max(p[0], 0.0), hi), min(max(p[1], 0.0), hi))


def update_tier(scenario: Scenario, fleet: dict, tier: int, t0: float, rng) -> tuple[list, float, tuple | None]:
    """Re-map one tier onto the demand it observes and fly it there.

    Returns the move plans, their duration, and the ``(view, assignment)``
    decision (``None`` when the tier observes no demand).
    """
    drones = fleet[tier]
    view = scenario.view(drones)
    if all(c.weight == 0 for c in view.observed_cells):
        return [], 0.0, None
    assignment = assign_drones(drones, view.observed_cells)
    cfg = scenario.cfg
    assignment = centroidal_step(assignment, view.observed_cells, scenario.users, cfg.kde_bandwidth,
                                 cfg.centroid_resolution)
    by_id = {d.id: d for d in drones}
    targets = {d_id: _target(scenario, by_id[d_id], t, rng) for d_id, t in assignment.targets().items()}
    plans, duration = _fly(scenario, drones, targets, tier, t0)
    return plans, duration, (view, assignment)


def _reshuffle(scenario: Scenario, fleet: dict, snap: Snapshot, fraction: float, t0: float, rng) -> tuple[dict, list, float]:
    """Send the worst-placed drones of each serving tier to badly served dense zones."""
    moved, plans_all, duration = {}, [], 0.0
    for tier in scenario.serving_tiers:
        view = snap.views.get(tier)
        if view is None:
            continue
        s = view.scores
        ids = [d.id for d in view.drones]
        best = dict(optimal_pairs(s, ids))  # row -> cell
        ratio = []
        for i in range(len(ids)):
            want = s[i, best[i]] if i in best else 0.0
            own = view.resident[i]
            ratio.append(own / want if want > 0 else 1.0)
        worst = [i for i in np.argsort(ratio, kind="stable") if ratio[i] < 1.0 - 1e-9]
        worst = worst[: math.ceil(fraction * len(ids))]
        owner = {c: r for r, c in best.items()}
        dense = [
            j for j, c in enumerate(view.observed_cells)
            if c.demand_class in (DemandClass.HIGH, DemandClass.MEDIUM) and owner.get(j) != j
        ]
        dense.sort(key=lambda j: (-view.observed_cells[j].weight, -view.observed_cells[j].density, j))
        targets = {}
        for i, j in zip(worst, dense):
            targets[ids[i]] = _target(scenario, view.drones[i], _unserved_centroid(scenario, view, j), rng)
        moved[tier] = len(targets)
        if targets:
            plans, dur = _fly(scenario, fleet[tier], targets, tier, t0)
            plans_all += plans
            duration = max(duration, dur)
    return moved, plans_all, duration


def _unserved_centroid(scenario: Scenario, view, j: int) -> Point2:
    """Request-weighted mean of the zone's observed users outside its resident's footprint."""
    cell = view.observed_cells[j]
    pts = scenario.users.positions[cell.users]
    w = scenario.users.requests[cell.users].astype(float)
    box = view.drones[j].footprint.box
    out = ~((pts[:, 0] >= box.x_min) & (pts[:, 0] <= box.x_max) & (pts[:, 1] >= box.y_min) & (pts[:, 1] <= box.y_max))
    if not np.any(out) or w[out].sum() <= 0:
        return cell.centroid
    c = (pts[out] * w[out, None]).sum(axis=0) / w[out].sum()
    return Point2(float(c[0]), float(c[1]))


def nbrl_iteration(state: NbrlState, scenario: Scenario, config: NbrlConfig, rng=None,
                   trace: list | None = None) -> NbrlState:
    """One pass over tiers N..1, evaluation, and (if not converged) a reshuffle."""
    if state.converged:
        raise ValueError("state has already converged")
    rng = np.random.default_rng(rng)
    fleet = _copy_fleet(state.fleet)
    t = state.time
    it = state.iteration + 1
    plans_all: list[MovePlan] = []
    decisions = {}
    for tier in sorted(fleet, reverse=True):
        plans, dur, decision = update_tier(scenario, fleet, tier, t, rng)
        if decision is not None:
            decisions[tier] = decision
        plans_all += plans
        _deplete(scenario, fleet, dur)
        t += dur
    if log.isEnabledFor(logging.DEBUG):
        # tiers fly at different altitudes, so cross-tier overlap is reported, not repaired
        log.debug("iteration %d: %d cross-tier footprint overlaps", it, _cross_tier_overlaps(fleet))
    snap = scenario.snapshot(fleet, t, decisions)
    # the census admitted these requests into drone buffers during the pass
    admitted = {k: float(scenario.users.requests[c.active_users].sum())
                for v in snap.views.values() for k, c in v.censuses.items()}
    _deplete(scenario, fleet, scenario.cfg.dt, admitted)
    t += scenario.cfg.dt
    snap = scenario.snapshot(fleet, t, decisions)
    best_fleet, best = state.best_fleet, state.best
    if snap.likelihood > best.likelihood or state.iteration == 0:
        best_fleet, best = _copy_fleet(fleet), snap
    converged = snap.likelihood >= 1.0 - config.tolerance
    moved: dict = {}
    if converged:
        best_fleet, best = _copy_fleet(fleet), snap
    elif it < config.max_iterations:
        moved, plans, dur = _reshuffle(scenario, fleet, snap, config.reshuffle_fraction, t, rng)
        plans_all += plans
        if dur > 0:
            _deplete(scenario, fleet, dur)
            t += dur
            snap = scenario.snapshot(fleet, t, decisions)
    if trace is not None:
        for tier in sorted(fleet, reverse=True):
            v = snap.views.get(tier)
            trace.append(TraceRow(it, tier, _tier_likelihood(v), snap.accuracy, snap.coverage, snap.S_T,
                                  moved.get(tier, 0)))
    return NbrlState(it, fleet, t, snap, best_fleet, best, converged, plans_all)


def _cross_tier_overlaps(fleet: dict) -> int:
    n = 0
    for ta, tb in itertools.combinations(sorted(fleet), 2):
        for a in fleet[ta]:
            for b in fleet[tb]:
                n += aabb_overlap(a.footprint.box, b.footprint.box).overlapped
    return n


def _tier_likelihood(view) -> float:
    if view is None:
        return 1.0
    return likelihood_ratio(view.achieved, optimal_score(view.scores))


def nbrl_run(scenario: Scenario, config: NbrlConfig | None = None, seed=None) -> tuple[NbrlState, MetricsSeries]:
    """Iterate until the likelihood is within tolerance of 1 or the cap is hit.

    The returned state is the best one seen; per-iteration records carry the
    best-so-far likelihood, accuracy and handled fraction with the live
    fleet survivability.
    """
    config = config or NbrlConfig.from_scenario(scenario.cfg)
    rng = np.random.default_rng(scenario.rng_seed if seed is None else seed)
    state = initial_state(scenario)
    series = MetricsSeries(layers={d.id: t for t, ds in state.fleet.items() for d in ds})
    while not state.converged and state.iteration < config.max_iterations:
        state = nbrl_iteration(state, scenario, config, rng, series.trace)
        series.moves += state.moves
        series.survivability.append(state.snapshot.survivability)
        b = state.best
        series.records.append(
            IterationRecord(state.iteration, b.likelihood, b.accuracy, b.handled, b.coverage,
                            state.snapshot.S_T, state.snapshot.likelihood, len(b.accurate_ids))
        )
    series.converged = state.converged
    series.iterations_to_converge = state.iteration
    final = NbrlState(state.iteration, state.best_fleet, state.time, state.best, state.best_fleet, state.best,
                      state.converged, state.moves)
    return final, series
