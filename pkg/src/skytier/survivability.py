"""Resource-driven survivability of drones, tiers, and the whole fleet.

Two modes are supported. ``literal`` multiplies the per-drone decay rate
``-(1/t) ln(f_t/f_0)`` directly into the layer product. ``normalized``
uses the survival probability ``f_t/f_0 = exp(-S_D t)`` instead so that
layer and fleet values stay in ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

LITERAL = "literal"
NORMALIZED = "normalized"
MODES = (LITERAL, NORMALIZED)
# what f_t measures: the resource index, or the share of live connections
RESOURCE = "resource"
CONNECTION = "connection"
INDEX_SOURCES = (RESOURCE, CONNECTION)


@dataclass(frozen=True)
class DroneResources:
    """memory: free fraction in [0, 1]; energy: J; radio_range: m; transmission_time: s."""

    memory: float = 1.0
    energy: float = 5.0e5
    radio_range: float = 750.0
    transmission_time: float = 0.01

    def __post_init__(self):
        if min(self.memory, self.energy, self.radio_range, self.transmission_time) < 0:
            raise ValueError("resources must be non-negative")
        if self.memory > 1.0:
            raise ValueError("memory is a fraction of the initial capacity")


@dataclass(frozen=True)
class ResourceModel:
    """Consumption knobs. Flight power dominates transmit power."""

    p_flight: float = 150.0
    p_tx: float = 5.0
    buffer_capacity: float = 800.0
    memory_per_request: float = 2.0e-5
    lam0: float = 5.0

    def deplete(self, r: DroneResources, dt: float, admitted_requests: float = 0.0) -> DroneResources:
        energy = max(0.0, r.energy - (self.p_flight + self.p_tx) * dt)
        memory = max(0.0, r.memory - self.memory_per_request * admitted_requests)
        return replace(r, energy=energy, memory=memory)


@dataclass(frozen=True)
class ConnectionCensus:
    total: int
    active: int
    active_users: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.active <= self.total:
            raise ValueError(f"invalid census {self.active}/{self.total}")

    @property
    def fraction(self) -> float:
        # a drone without assigned users has lost no connections
        return self.active / self.total if self.total else 1.0


def resource_index(r: DroneResources, initial: DroneResources, lam: float, lam0: float = 5.0) -> float:
    """Health index in [0, 1]: geometric mean of resource ratios, damped by load.

    Ratios are memory, energy, and radio range against their initial values
    plus ``min(1, tau0/tau)`` for transmission time; the mean is scaled by
    ``min(1, lam0/lam)``.
    """
    if min(initial.memory, initial.energy, initial.radio_range, initial.transmission_time) <= 0:
        raise ValueError("initial resources must be strictly positive")
    if lam <= 0 or lam0 <= 0:
        raise ValueError("loads must be positive")
    ratios = (
        min(1.0, r.memory / initial.memory),
        min(1.0, r.energy / initial.energy),
        min(1.0, r.radio_range / initial.radio_range),
        1.0 if r.transmission_time == 0 else min(1.0, initial.transmission_time / r.transmission_time),
    )
    if min(ratios) <= 0.0:
        return 0.0
    gm = math.exp(sum(math.log(x) for x in ratios) / 4.0)
    return gm * min(1.0, lam0 / lam)


def drone_survivability(f_t: float, f_0: float, t: float) -> float:
    """Decay rate ``-(1/t) ln(f_t/f_0)`` per second."""
    if f_0 <= 0:
        raise ValueError("f_0 must be positive")
    if f_t <= 0:
        raise ValueError("exhausted drone: f_t must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    if f_t > f_0 * (1 + 1e-12):
        raise ValueError("f_t exceeds f_0")
    return max(0.0, -math.log(f_t / f_0) / t)


def layer_survivability(drones: Sequence[tuple]) -> float:
    """Product over ``(survival_term, ConnectionCensus)`` pairs of term * C_A/C_T."""
    if not drones:
        raise ValueError("a layer needs at least one drone")
    s = 1.0
    for term, census in drones:
        s *= term * census.fraction
    return s


def total_survivability(layers: Sequence[tuple], fleet_size: int, mode: str = LITERAL) -> float:
    """Product over ``(S_L, active_count, layer_size)`` of S_L times an activity ratio.

    The ratio is ``active/fleet_size`` in literal mode and
    ``active/layer_size`` in normalized mode.
    """
    if fleet_size <= 0:
        raise ValueError("fleet size must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    s = 1.0
    for s_l, active, size in layers:
        if not 0 <= active <= fleet_size:
            raise ValueError("active drone count out of range")
        denom = fleet_size if mode == LITERAL else size
        s *= s_l * (active / denom if denom else 1.0)
    return s


def census_active(
    drone,
    positions: np.ndarray,
    requests: np.ndarray,
    links,
    model: ResourceModel = ResourceModel(),
) -> ConnectionCensus:
    """Count the drone's active connections among the ``links`` user indices.

    A link is active when the user is within radio range (3-D distance),
    the drone can afford one transmission, and the user's requests fit in
    the memory buffer. Users are admitted nearest first.
    """
    links = np.asarray(links, dtype=np.int64)
    total = len(links)
    r = drone.resources
    if total == 0 or r.energy < model.p_tx * r.transmission_time:
        return ConnectionCensus(total, 0, np.zeros(0, dtype=np.int64))
    d = positions[links] - np.asarray(drone.position, dtype=float)
    dist = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2 + drone.altitude**2)
    order = np.lexsort((links, dist))
    in_range = dist[order] <= r.radio_range
    cand = links[order][in_range]
    load = np.cumsum(requests[cand])
    admitted = cand[load <= r.memory * model.buffer_capacity]
    return ConnectionCensus(total, len(admitted), np.sort(admitted))


@dataclass
class SurvivabilityReport:
    per_drone: list
    per_layer: list
    total: float
    mode: str
    horizon: float
    time: float

    def __post_init__(self):
        if self.time > self.horizon:
            raise ValueError("time exceeds the horizon")


def survivability_report(
    tiers: Sequence[Sequence],
    censuses: dict,
    f_initial: dict,
    t: float,
    horizon: float,
    lam: float,
    model: ResourceModel = ResourceModel(),
    mode: str = NORMALIZED,
    index: str = RESOURCE,
) -> SurvivabilityReport:
    """Evaluate per-drone, per-layer and fleet survivability at time ``t``.

    ``tiers`` lists drones per layer; ``censuses`` and ``f_initial`` are
    keyed by drone id. Exhausted drones contribute a zero term. With
    ``index="connection"`` f_t is the census fraction C_A/C_T against an
    initial value of 1 and ``f_initial`` is ignored.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if index not in INDEX_SOURCES:
        raise ValueError(f"unknown index source {index!r}")
    fleet = sum(len(t_) for t_ in tiers)
    per_drone, per_layer, layers = [], [], []
    for drones in tiers:
        terms = []
        active = 0
        for d in drones:
            if index == RESOURCE:
                f0 = f_initial[d.id]
                ft = resource_index(d.resources, d.initial, lam, model.lam0)
            else:
                f0, ft = 1.0, censuses[d.id].fraction
            if ft <= 0:
                term, s_d = 0.0, math.inf
            else:
                active += 1
                s_d = drone_survivability(min(ft, f0), f0, t) if t > 0 else 0.0
                term = min(1.0, ft / f0) if mode == NORMALIZED else s_d
            per_drone.append((d.id, ft, s_d))
            terms.append((term, censuses[d.id]))
        s_l = layer_survivability(terms) if terms else 1.0
        per_layer.append(s_l)
        layers.append((s_l, active, len(drones)))
    total = total_survivability(layers, max(fleet, 1), mode) if fleet else 1.0
    return SurvivabilityReport(per_drone, per_layer, total, mode, horizon, t)


class SurvivabilityMatrix:
    """Timing record of ``n`` aerial nodes against ``m`` interacting nodes.

    Each entry holds ``(timestamp, resource_index, active)``. A row whose
    mean resource index falls below ``support_threshold`` is flagged as
    needing additional resources.
    """

    def __init__(self, n: int, m: int, support_threshold: float = 0.2):
        if n < 1 or m < 1:
            raise ValueError("matrix needs n, m >= 1")
        self.timestamps = np.zeros((n, m))
        self.resource = np.ones((n, m))
        self.active = np.zeros((n, m), dtype=bool)
        self.support_threshold = support_threshold

    @property
    def shape(self):
        return self.resource.shape

    def update(self, node: int, peer: int, t: float, f_t: float, active: bool) -> "SurvivabilityMatrix":
        n, m = self.shape
        if not (0 <= node < n and 0 <= peer < m):
            raise IndexError(f"entry ({node}, {peer}) outside {n}x{m} matrix")
        if t < self.timestamps[node, peer]:
            raise ValueError(f"time regression at ({node}, {peer}): {t} < {self.timestamps[node, peer]}")
        self.timestamps[node, peer] = t
        self.resource[node, peer] = f_t
        self.active[node, peer] = active
        return self

    def entry(self, node: int, peer: int) -> tuple:
        return (float(self.timestamps[node, peer]), float(self.resource[node, peer]), bool(self.active[node, peer]))

    def support_requests(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.resource.mean(axis=1) < self.support_threshold)]


def matrix_update(m: SurvivabilityMatrix, node: int, peer: int, t: float, f_t: float, active: bool) -> SurvivabilityMatrix:
    return m.update(node, peer, t, f_t, active)


def simulate_depletion(
    tiers: Sequence[Sequence],
    positions: np.ndarray,
    requests: np.ndarray,
    links: dict,
    steps: int,
    dt: float,
    lam: float,
    model: ResourceModel = ResourceModel(),
    mode: str = NORMALIZED,
) -> list[SurvivabilityReport]:
    """Hover the fleet in place for ``steps`` epochs and report survivability each epoch.

    Drones are updated in place. ``links`` maps drone id to its user indices.
    """
    drones = [d for t_ in tiers for d in t_]
    f_init = {d.id: resource_index(d.initial, d.initial, lam, model.lam0) for d in drones}
    horizon = steps * dt
    reports = []
    for k in range(1, steps + 1):
        censuses = {}
        for d in drones:
            c = census_active(d, positions, requests, links.get(d.id, []), model)
            d.resources = model.deplete(d.resources, dt, float(requests[c.active_users].sum()))
        for d in drones:
            censuses[d.id] = census_active(d, positions, requests, links.get(d.id, []), model)
        reports.append(survivability_report(tiers, censuses, f_init, k * dt, horizon, lam, model, mode))
    return reports
