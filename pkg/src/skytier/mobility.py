"""Waypoint kinematics and the same-tier footprint separation law."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Sequence

from .geometry import Aabb, Point2, aabb_overlap

SEPARATION_MARGIN = 1e-7
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class InfeasiblePackingError(RuntimeError):
    def __init__(self, first: int, second: int, time: float, reason: str = ""):
        self.pair = (first, second)
        self.time = time
        super().__init__(f"cannot separate drones {first} and {second} at t={time:g}s {reason}".rstrip())


@dataclass(frozen=True)
class Waypoint:
    position: Point2
    altitude: float
    time: float


@dataclass
class MovePlan:
    drone_id: int
    waypoints: list = field(default_factory=list)

    def __post_init__(self):
        ts = [w.time for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint times must be strictly increasing")

    @property
    def final(self) -> Waypoint:
        return self.waypoints[-1]

    @property
    def duration(self) -> float:
        return self.waypoints[-1].time - self.waypoints[0].time if self.waypoints else 0.0

    def path_length(self) -> float:
        return sum(_dist3(a, b) for a, b in zip(self.waypoints, self.waypoints[1:]))

    def hold_until(self, t_end: float, dt: float) -> "MovePlan":
        """Extend with stationary waypoints every ``dt`` up to ``t_end``."""
        wps = list(self.waypoints)
        last = wps[-1]
        k = 1
        while last.time + k * dt <= t_end + 1e-9:
            wps.append(replace(last, time=last.time + k * dt))
            k += 1
        return MovePlan(self.drone_id, wps)


def _dist3(a: Waypoint, b: Waypoint) -> float:
    return math.sqrt(
        (a.position[0] - b.position[0]) ** 2 + (a.position[1] - b.position[1]) ** 2 + (a.altitude - b.altitude) ** 2
    )


def plan_waypoints(start, end, v_max: float, dt: float, t0: float = 0.0, drone_id: int = 0) -> MovePlan:
    """Straight-line plan sampled every ``dt`` from ``start`` to ``end``.

    ``start`` and ``end`` are ``(x, y, altitude)``. The first waypoint is the
    start (a single waypoint when start equals end) and the last is exactly
    the destination; every step is at most ``v_max * dt`` long.
    """
    if v_max <= 0 or dt <= 0:
        raise ValueError("v_max and dt must be positive")
    x0, y0, z0 = map(float, start)
    x1, y1, z1 = map(float, end)
    dist = math.sqrt((x1 - x0) ** 2 + (y1 - y0) ** 2 + (z1 - z0) ** 2)
    if dist == 0.0:
        return MovePlan(drone_id, [Waypoint(Point2(x1, y1), z1, t0)])
    n = max(1, math.ceil(dist / (v_max * dt) - 1e-12))
    wps = []
    for k in range(n):
        f = k / n
        wps.append(Waypoint(Point2(x0 + f * (x1 - x0), y0 + f * (y1 - y0)), z0 + f * (z1 - z0), t0 + k * dt))
    wps.append(Waypoint(Point2(x1, y1), z1, t0 + n * dt))
    return MovePlan(drone_id, wps)


def _side(fp) -> float:
    return float(getattr(fp, "side", fp))


def _escape(ci, cj, hx, hy, key: int) -> Point2:
    """Smallest move of ``cj`` along the center axis that clears one axis."""
    dx, dy = cj[0] - ci[0], cj[1] - ci[1]
    norm = math.hypot(dx, dy)
    if norm <= 1e-12:
        ang = key * _GOLDEN_ANGLE
        ux, uy = math.cos(ang), math.sin(ang)
        dx = dy = 0.0
    else:
        ux, uy = dx / norm, dy / norm
    sx = (hx + SEPARATION_MARGIN - abs(dx)) / abs(ux) if abs(ux) > 1e-12 else math.inf
    sy = (hy + SEPARATION_MARGIN - abs(dy)) / abs(uy) if abs(uy) > 1e-12 else math.inf
    s = max(0.0, min(sx, sy))
    return Point2(cj[0] + s * ux, cj[1] + s * uy)


def _conflicts(pos, sides, j, fixed) -> list[int]:
    bj = Aabb.around(pos[j], sides[j])
    return [i for i in fixed if aabb_overlap(Aabb.around(pos[i], sides[i]), bj).overlapped]


def enforce_separation(
    plans: Sequence[MovePlan],
    footprints: Mapping[int, object],
    tier: int,
    zone_area: float | None = None,
    max_rounds: int = 50,
) -> list[MovePlan]:
    """Remove same-tier footprint overlaps at every common timestep.

    At each timestep drones are settled in id order; a later drone that
    overlaps an earlier one is shifted along their center axis by the
    minimal distance that zeroes one axis overlap. Only conflicting
    waypoints are moved. ``footprints`` maps drone id to a footprint (or its
    side). ``tier`` labels the group in error messages.
    """
    sides = {p.drone_id: _side(footprints[p.drone_id]) for p in plans}
    order = sorted(range(len(plans)), key=lambda k: plans[k].drone_id)
    by_time: dict = {}
    for k in order:
        for w_idx, w in enumerate(plans[k].waypoints):
            by_time.setdefault(round(w.time, 9), []).append((k, w_idx))
    new_wps = {k: list(plans[k].waypoints) for k in range(len(plans))}
    changed = set()
    for t in sorted(by_time):
        entries = by_time[t]
        if len(entries) < 2:
            continue
        pos = {plans[k].drone_id: new_wps[k][w].position for k, w in entries}
        sd = {plans[k].drone_id: sides[plans[k].drone_id] for k, _ in entries}
        fixed: list[int] = []
        conflict = None
        for k, w in entries:
            j = plans[k].drone_id
            start = pos[j]
            rounds = 0
            hits = _conflicts(pos, sd, j, fixed)
            while hits:
                i = hits[0]
                conflict = conflict or (i, j)
                rounds += 1
                if rounds > max_rounds:
                    pos[j] = _ray_escape(pos, sd, j, fixed, start, pos[i], t)
                    break
                pos[j] = _escape(pos[i], pos[j], 0.5 * (sd[i] + sd[j]), 0.5 * (sd[i] + sd[j]), j * 7919 + i)
                hits = _conflicts(pos, sd, j, fixed)
            if pos[j] != start:
                new_wps[k][w] = replace(new_wps[k][w], position=pos[j])
                changed.add(k)
            fixed.append(j)
        if zone_area is not None and conflict is not None:
            used = sum(s * s for s in sd.values())
            if used > zone_area:
                raise InfeasiblePackingError(
                    *conflict, t, f"in tier {tier}: footprints need {used:.0f} m^2 > zone {zone_area:.0f} m^2"
                )
    return [MovePlan(p.drone_id, new_wps[k]) if k in changed else p for k, p in enumerate(plans)]


def _ray_escape(pos, sd, j, fixed, start, blocker, t, steps: int = 10_000) -> Point2:
    """Walk away from the blocker along the center axis until clear of every settled drone."""
    dx, dy = start[0] - blocker[0], start[1] - blocker[1]
    norm = math.hypot(dx, dy)
    ux, uy = (dx / norm, dy / norm) if norm > 1e-12 else (1.0, 0.0)
    step = 0.25 * min(sd[j], min(sd[i] for i in fixed))
    trial = dict(pos)
    for n in range(1, steps):
        trial[j] = Point2(start[0] + n * step * ux, start[1] + n * step * uy)
        if not _conflicts(trial, sd, j, fixed):
            return trial[j]
    raise InfeasiblePackingError(min(fixed), j, t)


def overlapping_pairs(plans: Sequence[MovePlan], footprints: Mapping[int, object]) -> list[tuple]:
    """Exhaustive scan: every ``(t, id_a, id_b)`` whose footprints overlap."""
    found = []
    table = [{round(w.time, 9): w.position for w in p.waypoints} for p in plans]
    for a in range(len(plans)):
        for b in range(a + 1, len(plans)):
            sa, sb = _side(footprints[plans[a].drone_id]), _side(footprints[plans[b].drone_id])
            for t in table[a].keys() & table[b].keys():
                if aabb_overlap(Aabb.around(table[a][t], sa), Aabb.around(table[b][t], sb)).overlapped:
                    found.append((t, plans[a].drone_id, plans[b].drone_id))
    return found


class Coordinator(NamedTuple):
    kind: str  # "abs" or "mbs"
    id: int


@dataclass
class Topology:
    """Coordinating infrastructure: ground MBS sites and the aerial tiers."""

    mbs: Mapping[int, tuple]
    tiers: Mapping[int, Sequence]

    def drones_in(self, tier: int):
        return self.tiers.get(tier, ())


def coordinator_for(drone, topology: Topology) -> Coordinator:
    """Serving previous-tier ABS within its radio range, else the nearest ground MBS."""
    if drone.tier > 1:
        best, best_d = None, math.inf
        for up in topology.drones_in(drone.tier - 1):
            d = math.sqrt(
                (up.position[0] - drone.position[0]) ** 2
                + (up.position[1] - drone.position[1]) ** 2
                + (up.altitude - drone.altitude) ** 2
            )
            if d <= up.resources.radio_range and (d < best_d or (d == best_d and up.id < best.id)):
                best, best_d = up, d
        if best is not None:
            return Coordinator("abs", best.id)
    if not topology.mbs:
        raise RuntimeError(f"drone {drone.id} has no reachable coordinator")
    mid = min(
        topology.mbs,
        key=lambda m: (math.hypot(topology.mbs[m][0] - drone.position[0], topology.mbs[m][1] - drone.position[1]), m),
    )
    return Coordinator("mbs", mid)
