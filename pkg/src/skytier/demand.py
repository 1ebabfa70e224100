"""Ground-user population and demand-zone classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .geometry import (
    ConvexPolygon,
    Point2,
    nearest_generator,
    polygon_area,
    polygon_centroid,
    polygon_polar_moment,
    voronoi_partition,
)


class DemandClass(enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    NONE = "None"

    @property
    def weight(self) -> int:
        return _WEIGHTS[self]


_WEIGHTS = {DemandClass.HIGH: 3, DemandClass.MEDIUM: 2, DemandClass.LOW: 1, DemandClass.NONE: 0}


class User(NamedTuple):
    position: Point2
    request_count: int


@dataclass
class UserPopulation:
    """Users stored column-wise: ``positions`` is ``(n, 2)``, ``requests`` is ``(n,)``."""

    positions: np.ndarray
    requests: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.requests = np.asarray(self.requests, dtype=np.int64).reshape(-1)
        if len(self.positions) != len(self.requests):
            raise ValueError("positions and requests differ in length")
        if np.any(self.requests < 0):
            raise ValueError("request counts must be non-negative")

    def __len__(self) -> int:
        return len(self.requests)

    def __iter__(self) -> Iterator[User]:
        for (x, y), r in zip(self.positions, self.requests):
            yield User(Point2(float(x), float(y)), int(r))

    def __getitem__(self, i: int) -> User:
        x, y = self.positions[i]
        return User(Point2(float(x), float(y)), int(self.requests[i]))

    def subset(self, idx) -> "UserPopulation":
        return UserPopulation(self.positions[idx], self.requests[idx])

    @classmethod
    def empty(cls) -> "UserPopulation":
        return cls(np.zeros((0, 2)), np.zeros(0, dtype=np.int64))

    @classmethod
    def concat(cls, pops: Sequence["UserPopulation"]) -> "UserPopulation":
        if not pops:
            return cls.empty()
        return cls(np.concatenate([p.positions for p in pops]), np.concatenate([p.requests for p in pops]))


@dataclass(frozen=True)
class ClusterSpec:
    """Spatial law of the user population: uniform background plus ``k`` Gaussian hot spots."""

    k: int = 3
    sigma: float = 150.0
    fraction: float = 0.3

    def __post_init__(self):
        if self.k < 0 or self.sigma <= 0 or not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"invalid cluster spec {self}")


def _uniform_in(bounds: ConvexPolygon, n: int, rng: np.random.Generator) -> np.ndarray:
    box = bounds.bbox()
    out = np.zeros((0, 2))
    while len(out) < n:
        m = max(16, 2 * (n - len(out)))
        cand = np.column_stack(
            [rng.uniform(box.x_min, box.x_max, m), rng.uniform(box.y_min, box.y_max, m)]
        )
        out = np.vstack([out, cand[bounds.contains(cand)]])
    return out[:n]


def generate_users(
    count: int,
    lam: float,
    bounds: ConvexPolygon,
    cluster_spec: ClusterSpec = ClusterSpec(),
    seed=None,
) -> UserPopulation:
    """Draw ``count`` users inside ``bounds`` with Poisson(``lam``) request counts.

    A ``cluster_spec.fraction`` share of users is placed around ``k`` seeded
    Gaussian centers; the rest are uniform. Cluster draws falling outside
    the bounds are redrawn.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    if count == 0:
        return UserPopulation.empty()
    n_cl = int(round(cluster_spec.fraction * count)) if cluster_spec.k > 0 else 0
    pts = [_uniform_in(bounds, count - n_cl, rng)]
    if n_cl:
        centers = _uniform_in(bounds, cluster_spec.k, rng)
        which = rng.integers(0, cluster_spec.k, n_cl)
        clustered = centers[which] + rng.normal(0.0, cluster_spec.sigma, (n_cl, 2))
        bad = ~bounds.contains(clustered)
        while np.any(bad):
            clustered[bad] = centers[which[bad]] + rng.normal(0.0, cluster_spec.sigma, (int(bad.sum()), 2))
            bad = ~bounds.contains(clustered)
        pts.append(clustered)
    positions = np.vstack(pts)
    positions = positions[rng.permutation(count)]
    requests = rng.poisson(lam, count)
    return UserPopulation(positions, requests)


@dataclass
class DemandCell:
    region: ConvexPolygon
    users: np.ndarray
    total_requests: int
    demand_class: DemandClass = DemandClass.NONE
    centroid: Point2 = None
    polar_moment: float = None
    area: float = field(default=None, repr=False)

    def __post_init__(self):
        self.users = np.asarray(self.users, dtype=np.int64)
        if self.centroid is None:
            self.centroid = polygon_centroid(self.region)
        if self.polar_moment is None:
            self.polar_moment = polygon_polar_moment(self.region)
        if self.area is None:
            self.area = polygon_area(self.region)

    @property
    def density(self) -> float:
        """Requests per square meter."""
        return self.total_requests / self.area

    @property
    def weight(self) -> int:
        return self.demand_class.weight


def classify_demand(cells: Sequence[DemandCell], rtol: float = 1e-12) -> list[DemandCell]:
    """Label cells High/Medium/Low by request-density terciles; empty cells get None.

    Nonzero cells are ranked by density, highest first. Rank ``r`` out of
    ``n`` is High when ``r < n/3`` and Medium when ``r < 2n/3``. Densities
    equal within ``rtol`` share the best rank of their group.
    """
    if not cells:
        raise ValueError("no cells to classify")
    out = [replace(c, demand_class=DemandClass.NONE) for c in cells]
    live = [i for i, c in enumerate(cells) if c.total_requests > 0]
    n = len(live)
    if n == 0:
        return out
    dens = np.array([cells[i].density for i in live])
    order = np.argsort(-dens, kind="stable")
    rank = np.empty(n, dtype=int)
    lead = 0
    for pos, k in enumerate(order):
        if pos and not np.isclose(dens[k], dens[order[lead]], rtol=rtol, atol=0.0):
            lead = pos
        rank[k] = lead
    for k, i in enumerate(live):
        if 3 * rank[k] < n:
            cls = DemandClass.HIGH
        elif 3 * rank[k] < 2 * n:
            cls = DemandClass.MEDIUM
        else:
            cls = DemandClass.LOW
        out[i].demand_class = cls
    return out


def assign_users(population: UserPopulation, generators, include=None) -> list[np.ndarray]:
    """Indices of users nearest to each generator, optionally restricted to ``include``."""
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    idx = np.arange(len(population)) if include is None else np.asarray(include, dtype=np.int64)
    if len(idx) == 0:
        return [np.zeros(0, dtype=np.int64) for _ in range(len(gens))]
    owner = nearest_generator(population.positions[idx], gens)
    return [idx[owner == i] for i in range(len(gens))]


def build_demand_cells(
    generators,
    bounds: ConvexPolygon,
    population: UserPopulation,
    include=None,
    members: Sequence[np.ndarray] | None = None,
) -> list[DemandCell]:
    """Partition ``bounds`` by ``generators`` and attach classified demand.

    ``members`` overrides the per-cell user lists (used when only part of a
    cell's users is observable); otherwise users are assigned to their
    nearest generator.
    """
    regions = voronoi_partition(generators, bounds)
    if members is None:
        members = assign_users(population, generators, include)
    cells = [
        DemandCell(region=r, users=m, total_requests=int(population.requests[m].sum()))
        for r, m in zip(regions, members)
    ]
    return classify_demand(cells)
