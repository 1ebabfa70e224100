"""Drone-to-demand-zone mapping and centroidal placement."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .demand import DemandCell, UserPopulation
from .drones import Drone, Footprint
from .geometry import Aabb, Point2, polygon_area, weighted_centroid
from .radio import RadioParams, link_ok

DEFAULT_BANDWIDTH = 50.0


@dataclass
class LocationAssignment:
    """Drone-to-cell pairs with the ground target chosen for each drone."""

    pairs: list = field(default_factory=list)  # (drone_id, cell_index, Point2)
    epsilon_applied: list = field(default_factory=list)  # Point2 offset per pair
    score: float = 0.0

    def __post_init__(self):
        ids = [p[0] for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise ValueError("a drone appears twice in the assignment")
        if not self.epsilon_applied:
            self.epsilon_applied = [Point2(0.0, 0.0)] * len(self.pairs)

    def mapping(self) -> dict:
        return {d: c for d, c, _ in self.pairs}

    def targets(self) -> dict:
        return {d: t for d, _, t in self.pairs}


def coverage_gain(drone: Drone, cell: DemandCell, target=None) -> float:
    """Share of the cell area under the drone's footprint centered on ``target`` (default: cell centroid)."""
    box = Footprint.at(cell.centroid if target is None else target, drone.altitude, drone.aperture).box
    inter = cell.region.intersect_box(box)
    return 0.0 if inter is None else polygon_area(inter) / cell.area


def score_matrix(drones: Sequence[Drone], cells: Sequence[DemandCell]) -> np.ndarray:
    """``S[i, j]`` = demand weight of cell j times coverage gain of drone i there."""
    s = np.zeros((len(drones), len(cells)))
    for j, c in enumerate(cells):
        w = c.weight
        if w == 0:
            continue
        for i, d in enumerate(drones):
            s[i, j] = w * coverage_gain(d, c)
    return s


def _best(s: np.ndarray, rows: list, cols: list) -> float:
    if not rows or not cols:
        return 0.0
    sub = s[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return float(sub[r, c].sum())


def optimal_score(s: np.ndarray) -> float:
    return _best(s, list(range(s.shape[0])), list(range(s.shape[1])))


def optimal_pairs(s: np.ndarray, drone_ids: Sequence[int]) -> list[tuple[int, int]]:
    """Score-optimal matching with a deterministic tie-break.

    Cells are visited in index order; each takes the lowest-id drone that
    keeps the remaining problem optimal. Zero-score pairs are never made.
    Returns ``(row, cell)`` pairs.
    """
    n_d, n_c = s.shape
    rows = sorted(range(n_d), key=lambda i: drone_ids[i])
    cols = list(range(n_c))
    remaining = _best(s, rows, cols)
    tol = 1e-9 * max(1.0, abs(remaining))
    out = []
    for c in range(n_c):
        cols.remove(c)
        for r in rows:
            if s[r, c] <= 0.0:
                continue
            rest = [q for q in rows if q != r]
            if s[r, c] + _best(s, rest, cols) >= remaining - tol:
                out.append((r, c))
                rows = rest
                remaining -= s[r, c]
                break
    return out


def assign_drones(drones: Sequence[Drone], cells: Sequence[DemandCell]) -> LocationAssignment:
    """Optimal drone-to-cell matching; targets start at the cell centroids."""
    if not drones or not cells:
        raise ValueError("assignment needs at least one drone and one cell")
    s = score_matrix(drones, cells)
    pairs = optimal_pairs(s, [d.id for d in drones])
    return LocationAssignment(
        pairs=[(drones[r].id, c, cells[c].centroid) for r, c in pairs],
        score=float(sum(s[r, c] for r, c in pairs)),
    )


def assignment_score(assignment: LocationAssignment, drones: Sequence[Drone], cells: Sequence[DemandCell]) -> float:
    by_id = {d.id: d for d in drones}
    return float(sum(cells[c].weight * coverage_gain(by_id[d], cells[c], t) for d, c, t in assignment.pairs))


def mapping_likelihood(assignment: LocationAssignment, drones: Sequence[Drone], cells: Sequence[DemandCell]) -> float:
    """Achieved assignment score over the optimal score; 1 when there is no demand.

    Achieved gains use each pair's target, the optimum uses cell centroids.
    """
    opt = optimal_score(score_matrix(drones, cells))
    if opt <= 0.0:
        return 1.0
    return likelihood_ratio(assignment_score(assignment, drones, cells), opt)


def likelihood_ratio(achieved: float, optimum: float) -> float:
    """``achieved / optimum`` in [0, 1]; 1 when there is no demand.

    The optimum scores footprints at cell centroids, so an off-centroid
    target that happens to cover more of a thin cell is capped at 1.
    """
    if optimum <= 0.0:
        return 1.0
    ratio = achieved / optimum
    # summation order differs between the two routes
    return 1.0 if ratio >= 1.0 - 1e-12 else ratio


def apply_placement_error(target, epsilon_max: float, seed=None) -> Point2:
    """Offset ``target`` by a draw uniform on the disc of radius ``epsilon_max``."""
    if epsilon_max < 0:
        raise ValueError("epsilon_max must be non-negative")
    if epsilon_max == 0:
        return Point2(float(target[0]), float(target[1]))
    rng = np.random.default_rng(seed)
    r = epsilon_max * math.sqrt(rng.uniform())
    a = rng.uniform(0.0, 2 * math.pi)
    return Point2(target[0] + r * math.cos(a), target[1] + r * math.sin(a))


class UserDensity:
    """Request-weighted Gaussian kernel density of a set of users."""

    def __init__(self, positions, weights, bandwidth: float = DEFAULT_BANDWIDTH):
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.weights = np.asarray(weights, dtype=float)
        self.bandwidth = bandwidth
        keep = self.weights > 0
        self.positions, self.weights = self.positions[keep], self.weights[keep]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(len(pts))
        inv = -0.5 / self.bandwidth**2
        # chunk over users to bound memory
        for k in range(0, len(self.weights), 64):
            p = self.positions[k:k + 64]
            d2 = (pts[:, None, 0] - p[None, :, 0]) ** 2 + (pts[:, None, 1] - p[None, :, 1]) ** 2
            out += np.exp(d2 * inv) @ self.weights[k:k + 64]
        return out


def demand_centroid(
    cell: DemandCell,
    population: UserPopulation,
    bandwidth: float = DEFAULT_BANDWIDTH,
    resolution: int = 64,
) -> Point2:
    """Demand-weighted centroid of a cell; the geometric centroid if it has no demand."""
    if cell.total_requests <= 0:
        return cell.centroid
    density = UserDensity(population.positions[cell.users], population.requests[cell.users], bandwidth)
    try:
        return weighted_centroid(cell.region, density, resolution)
    except ValueError:
        # kernel mass underflows when all users sit far outside the region
        return cell.centroid


def centroidal_step(
    assignment: LocationAssignment,
    cells: Sequence[DemandCell],
    population: UserPopulation,
    bandwidth: float = DEFAULT_BANDWIDTH,
    resolution: int = 64,
) -> LocationAssignment:
    """Move every assigned target to its cell's demand-weighted centroid."""
    cache: dict = {}
    pairs = []
    for d, c, _ in assignment.pairs:
        if c not in cache:
            cache[c] = demand_centroid(cells[c], population, bandwidth, resolution)
        pairs.append((d, c, cache[c]))
    return LocationAssignment(pairs, list(assignment.epsilon_applied), assignment.score)


def covered_mask(drones: Sequence[Drone], population: UserPopulation, radio: RadioParams = RadioParams()) -> np.ndarray:
    """Users inside at least one footprint whose drone also closes the link."""
    pts = population.positions
    covered = np.zeros(len(pts), dtype=bool)
    for d in drones:
        b = d.footprint.box
        inside = (pts[:, 0] >= b.x_min) & (pts[:, 0] <= b.x_max) & (pts[:, 1] >= b.y_min) & (pts[:, 1] <= b.y_max)
        if not inside.any():
            continue
        rel = pts[inside] - np.asarray(d.position)
        dist = np.sqrt((rel**2).sum(axis=1) + d.altitude**2)
        hit = np.flatnonzero(inside)[link_ok(dist, radio)]
        covered[hit] = True
    return covered


def coverage_fraction(drones: Sequence[Drone], population: UserPopulation, radio: RadioParams = RadioParams()) -> float:
    if len(population) == 0:
        return 0.0
    return float(covered_mask(drones, population, radio).mean())
