"""Scenario configuration, world construction and snapshot metrics.

A snapshot is evaluated from two views of demand. Drones *observe* only
the users their connection census admits (range, energy, buffer), and they
plan on that view. Allocation accuracy is scored against the *true* demand
of the same cells.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coverage import (
    LocationAssignment,
    coverage_gain,
    covered_mask,
    likelihood_ratio,
    optimal_pairs,
    optimal_score,
    score_matrix,
)
from .demand import ClusterSpec, DemandCell, UserPopulation, assign_users, classify_demand, generate_users
from .drones import MAX_ALTITUDE, MIN_ALTITUDE, Drone, aperture_for
from .geometry import ConvexPolygon, Point2, voronoi_partition
from .radio import RadioParams, link_ok
from .survivability import (
    INDEX_SOURCES,
    MODES,
    NORMALIZED,
    RESOURCE,
    DroneResources,
    ResourceModel,
    SurvivabilityReport,
    census_active,
    resource_index,
    survivability_report,
)


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    area_side: float = 2500.0
    mbs_count: int = 1
    tier1_per_mbs: int = 1
    tier1_range: float = 1000.0
    max_tier2: int = 20
    initial_uav_area: float = 1000.0
    users_min: int = 1000
    users_max: int = 2000
    lambda_min: float = 5.0
    lambda_max: float = 10.0
    altitude_band: tuple = (MIN_ALTITUDE, MAX_ALTITUDE)
    tiers: int = 2
    propagation: str = "free_space"
    tx_power_dbm: float = 20.0
    rx_sensitivity_dbm: float = -90.0
    frequency_hz: float = 2.4e9
    # simulation knobs
    tier2_range: float = 750.0
    buffer_capacity: float = 800.0
    energy_j: float = 5.0e5
    v_max: float = 15.0
    dt: float = 1.0
    placement_error: float = 5.0
    move_deadband: float = 1.0
    kde_bandwidth: float = 50.0
    centroid_resolution: int = 32
    cluster_count: int = 3
    cluster_sigma: float = 150.0
    cluster_fraction: float = 0.3
    survivability_mode: str = NORMALIZED
    survival_index: str = RESOURCE
    tolerance: float = 0.05
    max_iterations: int = 100
    reshuffle_fraction: float = 0.25
    swarm_size: int = 20
    swarm_iterations: int = 50

    def __post_init__(self):
        object.__setattr__(self, "altitude_band", tuple(float(a) for a in self.altitude_band))
        self.validate()

    def validate(self) -> None:
        positive = (
            "area_side", "tier1_range", "initial_uav_area", "lambda_min", "lambda_max", "frequency_hz",
            "tier2_range", "buffer_capacity", "energy_j", "v_max", "dt", "kde_bandwidth", "cluster_sigma",
        )
        for name in positive:
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0 or not math.isfinite(v):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        counts = ("mbs_count", "tier1_per_mbs", "tiers", "max_iterations", "swarm_size", "swarm_iterations",
                  "centroid_resolution")
        for name in counts:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {v!r}")
        for name in ("max_tier2", "users_min", "users_max", "cluster_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {v!r}")
        if self.tiers >= 2 and self.max_tier2 < 1:
            raise ConfigError("max_tier2 must be >= 1 when tiers >= 2")
        if self.users_min > self.users_max:
            raise ConfigError("users_min exceeds users_max")
        if self.lambda_min > self.lambda_max:
            raise ConfigError("lambda_min exceeds lambda_max")
        lo, hi = self.altitude_band if len(self.altitude_band) == 2 else (math.nan, math.nan)
        if not (MIN_ALTITUDE - 1e-9 <= lo <= hi <= MAX_ALTITUDE + 1e-9):
            raise ConfigError(f"altitude_band must lie within [{MIN_ALTITUDE}, {MAX_ALTITUDE}] m")
        if self.propagation != "free_space":
            raise ConfigError(f"unsupported propagation model {self.propagation!r}")
        if self.survivability_mode not in MODES:
            raise ConfigError(f"survivability_mode must be one of {MODES}")
        if self.survival_index not in INDEX_SOURCES:
            raise ConfigError(f"survival_index must be one of {INDEX_SOURCES}")
        if not 0.0 <= self.tolerance < 1.0:
            raise ConfigError("tolerance must be in [0, 1)")
        if not 0.0 < self.reshuffle_fraction <= 1.0:
            raise ConfigError("reshuffle_fraction must be in (0, 1]")
        if not 0.0 <= self.cluster_fraction <= 1.0:
            raise ConfigError("cluster_fraction must be in [0, 1]")
        for name in ("placement_error", "move_deadband"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def tier1_count(self) -> int:
        return self.mbs_count * self.tier1_per_mbs

    @property
    def radio(self) -> RadioParams:
        return RadioParams(self.frequency_hz, self.tx_power_dbm, self.rx_sensitivity_dbm)

    @property
    def resource_model(self) -> ResourceModel:
        return ResourceModel(buffer_capacity=self.buffer_capacity)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["altitude_band"] = list(self.altitude_band)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


REFERENCE_CONFIG = ScenarioConfig(max_tier2=10, users_min=1000, users_max=1000, lambda_min=5.0, lambda_max=5.0)


def friis_link_ok(tx: Drone, rx, cfg: ScenarioConfig) -> bool:
    """Free-space link budget check between a drone and a ground user (or point)."""
    pos = rx.position if hasattr(rx, "position") else rx
    d = math.sqrt((tx.position[0] - pos[0]) ** 2 + (tx.position[1] - pos[1]) ** 2 + tx.altitude**2)
    if d <= 0:
        raise ValueError("zero link distance")
    return bool(link_ok(d, cfg.radio))


def allocation_accuracy(assignment: LocationAssignment, oracle: LocationAssignment) -> float:
    """Share of assigned drones whose cell matches the oracle's; 1 when nothing is assigned."""
    got = assignment.mapping()
    if not got:
        return 1.0
    want = oracle.mapping()
    return sum(want.get(d) == c for d, c in got.items()) / len(got)


def users_handled_fraction(accurate_drones: Sequence[Drone], users: UserPopulation, cfg: ScenarioConfig) -> float:
    if len(users) == 0 or not accurate_drones:
        return 0.0
    return float(covered_mask(accurate_drones, users, cfg.radio).mean())


def mbs_sites(cfg: ScenarioConfig) -> dict:
    """Ground MBS sites on the centers of a near-square grid."""
    n = cfg.mbs_count
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    sites = {}
    for k in range(n):
        r, c = divmod(k, cols)
        sites[k] = ((c + 0.5) * cfg.area_side / cols, (r + 0.5) * cfg.area_side / rows)
    return sites


@dataclass
class TierView:
    drones: list
    true_cells: list
    observed_cells: list
    censuses: dict
    scores: np.ndarray  # against observed demand, footprints at cell centroids
    resident: np.ndarray  # each drone's score in its own cell, footprint where it is

    @property
    def achieved(self) -> float:
        return float(self.resident.sum())


@dataclass
class Snapshot:
    views: dict  # tier -> TierView
    likelihood: float
    accuracy: float
    handled: float
    coverage: float
    accurate_ids: list
    survivability: SurvivabilityReport

    @property
    def S_T(self) -> float:
        return self.survivability.total


@dataclass
class Scenario:
    """A built world: users, ground sites and the initial fleet per tier."""

    cfg: ScenarioConfig
    seed: int
    bounds: ConvexPolygon
    users: UserPopulation
    lam: float
    mbs: dict
    fleet: dict  # tier -> list[Drone]
    rng_seed: np.random.SeedSequence = field(repr=False)

    @property
    def serving_tiers(self) -> list:
        tiers = sorted(self.fleet)
        return [t for t in tiers if t >= 2] or tiers

    def initial_fleet(self) -> dict:
        return {t: [d.copy() for d in ds] for t, ds in self.fleet.items()}

    def f_initial(self) -> dict:
        m = self.cfg.resource_model
        return {d.id: resource_index(d.initial, d.initial, self.lam, m.lam0) for ds in self.fleet.values() for d in ds}

    def generators(self, drones: Sequence[Drone]) -> np.ndarray:
        # drones pushed to the border by separation still need an interior generator
        margin = 1e-6 * self.cfg.area_side
        g = np.clip(np.array([d.position for d in drones], dtype=float), margin, self.cfg.area_side - margin)
        mid = 0.5 * self.cfg.area_side
        for i in range(1, len(g)):
            while np.any(np.all(np.abs(g[:i] - g[i]) <= 1e-9, axis=1)):
                g[i] += margin * np.sign(mid - g[i] + 0.5 * margin)
        return g

    def view(self, drones: Sequence[Drone]) -> TierView:
        gens = self.generators(drones)
        regions = voronoi_partition(gens, self.bounds)
        members = assign_users(self.users, gens)
        req = self.users.requests
        true_cells = classify_demand(
            [DemandCell(r, m, int(req[m].sum())) for r, m in zip(regions, members)]
        )
        model = self.cfg.resource_model
        censuses, observed = {}, []
        for d, c in zip(drones, true_cells):
            cen = census_active(d, self.users.positions, req, c.users, model)
            censuses[d.id] = cen
            observed.append(
                DemandCell(c.region, cen.active_users, int(req[cen.active_users].sum()),
                           centroid=c.centroid, polar_moment=c.polar_moment, area=c.area)
            )
        observed = classify_demand(observed)
        resident = np.array([c.weight * coverage_gain(d, c, d.position) if c.weight else 0.0
                             for d, c in zip(drones, observed)])
        return TierView(list(drones), true_cells, observed, censuses, score_matrix(drones, observed), resident)

    def likelihood(self, fleet: dict) -> float:
        return self._likelihood([self.view(ds) for ds in fleet.values() if ds])

    def _likelihood(self, views) -> float:
        achieved = optimum = 0.0
        for v in views:
            achieved += v.achieved
            optimum += optimal_score(v.scores)
        if optimum <= 0.0 and self.users.requests.sum() > 0:
            # demand exists but no drone observes any of it
            return 0.0
        return likelihood_ratio(achieved, optimum)

    def snapshot(self, fleet: dict, t: float, decisions: dict | None = None) -> Snapshot:
        """Score ``fleet`` at time ``t``.

        Accuracy compares each serving tier's assignment with the true-demand
        optimum on the partition it was made on. ``decisions`` maps tier to
        ``(TierView, LocationAssignment)`` for algorithms that decide an
        assignment explicitly; otherwise every drone is taken as assigned to
        the cell it sits in.
        """
        views = {tier: self.view(ds) for tier, ds in fleet.items() if ds}
        likelihood = self._likelihood(views.values())
        chosen = {}
        for tier in self.serving_tiers:
            if decisions is not None and tier in decisions:
                chosen[tier] = decisions[tier]
            elif tier in views:
                chosen[tier] = (views[tier], resident_assignment(views[tier]))
        accuracy, accurate_ids = decision_accuracy(chosen.values())
        by_id = {d.id: d for ds in fleet.values() for d in ds}
        accurate = [by_id[i] for i in accurate_ids]
        handled = users_handled_fraction(accurate, self.users, self.cfg)
        serving = [d for t_ in self.serving_tiers for d in fleet.get(t_, [])]
        coverage = float(covered_mask(serving, self.users, self.cfg.radio).mean()) if len(self.users) else 0.0
        censuses = {k: c for v in views.values() for k, c in v.censuses.items()}
        tiers = [fleet[t_] for t_ in sorted(fleet)]
        report = survivability_report(
            tiers, censuses, self.f_initial(), t, math.inf, self.lam, self.cfg.resource_model,
            self.cfg.survivability_mode, self.cfg.survival_index,
        )
        return Snapshot(views, likelihood, accuracy, handled, coverage, accurate_ids, report)


def resident_assignment(v: TierView) -> LocationAssignment:
    """Every drone assigned to the cell it sits in, when that cell shows demand."""
    return LocationAssignment(
        [(d.id, i, Point2(*d.position)) for i, (d, c) in enumerate(zip(v.drones, v.observed_cells)) if c.weight > 0]
    )


def true_oracle(v: TierView) -> LocationAssignment:
    """Optimal assignment of the view's drones against true demand."""
    pairs = optimal_pairs(score_matrix(v.drones, v.true_cells), [d.id for d in v.drones])
    return LocationAssignment([(v.drones[r].id, c, v.true_cells[c].centroid) for r, c in pairs])


def decision_accuracy(decisions) -> tuple[float, list]:
    """Pooled allocation accuracy over ``(TierView, assignment)`` pairs and the accurate drone ids."""
    matched, assigned = [], 0
    for view, assignment in decisions:
        got = assignment.mapping()
        want = true_oracle(view).mapping()
        assigned += len(got)
        matched += sorted(d for d, c in got.items() if want.get(d) == c)
    return (len(matched) / assigned if assigned else 1.0), matched


def build_scenario(cfg: ScenarioConfig, seed: int) -> Scenario:
    """Draw users and the initial fleet. Deterministic in ``(cfg, seed)``."""
    ss = np.random.SeedSequence(int(seed))
    user_ss, fleet_ss, run_ss = ss.spawn(3)
    rng = np.random.default_rng(fleet_ss)
    side = cfg.area_side
    bounds = ConvexPolygon.box(0.0, 0.0, side, side)
    n_users = int(rng.integers(cfg.users_min, cfg.users_max + 1))
    lam = float(rng.uniform(cfg.lambda_min, cfg.lambda_max)) if cfg.lambda_max > cfg.lambda_min else cfg.lambda_min
    spec = ClusterSpec(cfg.cluster_count, cfg.cluster_sigma, cfg.cluster_fraction)
    users = generate_users(n_users, lam, bounds, spec, seed=user_ss) if n_users else UserPopulation.empty()
    aperture = aperture_for(cfg.initial_uav_area)
    lo, hi = cfg.altitude_band
    mbs = mbs_sites(cfg)
    fleet: dict = {1: []}
    next_id = 0
    t1_res = DroneResources(energy=cfg.energy_j, radio_range=cfg.tier1_range)
    for k, (mx, my) in mbs.items():
        for j in range(cfg.tier1_per_mbs):
            # spread co-sited tier-1 drones on a small ring
            ang = 2 * math.pi * j / cfg.tier1_per_mbs
            r = 0.0 if cfg.tier1_per_mbs == 1 else 100.0
            fleet[1].append(Drone(next_id, 1, (mx + r * math.cos(ang), my + r * math.sin(ang)), hi, t1_res,
                                  aperture=aperture))
            next_id += 1
    t2_res = DroneResources(energy=cfg.energy_j, radio_range=cfg.tier2_range)
    for tier in range(2, cfg.tiers + 1):
        fleet[tier] = []
        pos = rng.uniform(0.0, side, (cfg.max_tier2, 2))
        alts = rng.uniform(lo, hi, cfg.max_tier2)
        for p, a in zip(pos, alts):
            fleet[tier].append(Drone(next_id, tier, p, float(a), t2_res, aperture=aperture))
            next_id += 1
    return Scenario(cfg, int(seed), bounds, users, lam, mbs, fleet, run_ss)

