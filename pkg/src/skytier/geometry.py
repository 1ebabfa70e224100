"""Planar geometry kernel: convex polygons, clipped Voronoi cells, box overlap.

All lengths are meters. Polygons are convex and stored counter-clockwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

EPS = 1e-9


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box ``[x_min, x_max] x [y_min, y_max]``."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min <= self.x_max and self.y_min <= self.y_max):
            raise ValueError(f"invalid box extents: {self}")

    @classmethod
    def around(cls, center, side: float) -> "Aabb":
        h = 0.5 * side
        return cls(center[0] - h, center[0] + h, center[1] - h, center[1] + h)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_polygon(self) -> "ConvexPolygon":
        return ConvexPolygon.box(self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class OverlapResult:
    x_overlap: float
    y_overlap: float
    overlapped: bool


def aabb_overlap(a: Aabb, b: Aabb) -> OverlapResult:
    """Per-axis overlap lengths of two boxes and the Boolean overlap flag.

    The flag is set only when both axis overlaps are strictly positive, so
    boxes that merely touch along an edge do not overlap.
    """
    xo = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    yo = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    return OverlapResult(xo, yo, xo > 0.0 and yo > 0.0)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _signed_area(verts: Sequence[tuple]) -> float:
    s = 0.0
    n = len(verts)
    x0, y0 = verts[0]
    for i in range(1, n - 1):
        s += _cross((x0, y0), verts[i], verts[i + 1])
    return 0.5 * s


def _clean(verts: list, tol: float = EPS) -> list:
    """Drop repeated and collinear vertices left behind by clipping."""
    out = []
    for v in verts:
        if out and abs(v[0] - out[-1][0]) <= tol and abs(v[1] - out[-1][1]) <= tol:
            continue
        out.append(v)
    while len(out) > 1 and abs(out[0][0] - out[-1][0]) <= tol and abs(out[0][1] - out[-1][1]) <= tol:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        for i in range(n):
            p, q, r = out[i - 1], out[i], out[(i + 1) % n]
            # collinearity measured as distance of q from segment pr
            pr = math.hypot(r[0] - p[0], r[1] - p[1])
            if pr == 0.0 or abs(_cross(p, q, r)) / pr <= tol:
                del out[i]
                changed = True
                break
    return out


class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices.

    Parameters
    ----------
    vertices : sequence of (x, y)
        Vertex list. Clockwise input is reversed; repeated or collinear
        vertices are rejected unless ``validate=False``.
    """

    __slots__ = ("vertices", "_array")

    def __init__(self, vertices: Iterable, validate: bool = True):
        verts = [(float(x), float(y)) for x, y in vertices]
        if validate:
            if len(verts) < 3:
                raise ValueError("a polygon needs at least 3 vertices")
            if not all(math.isfinite(c) for v in verts for c in v):
                raise ValueError("polygon vertices must be finite")
            if _signed_area(verts) < 0:
                verts.reverse()
            if len(set(verts)) != len(verts):
                raise ValueError("polygon has repeated vertices")
            n = len(verts)
            for i in range(n):
                if _cross(verts[i - 1], verts[i], verts[(i + 1) % n]) <= 0.0:
                    raise ValueError("polygon is not strictly convex")
        self.vertices = tuple(verts)
        self._array = None

    @classmethod
    def box(cls, x0: float, y0: float, x1: float, y1: float) -> "ConvexPolygon":
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    @classmethod
    def regular(cls, n: int, radius: float, center=(0.0, 0.0), phase: float = 0.0) -> "ConvexPolygon":
        return cls(
            [
                (center[0] + radius * math.cos(phase + 2 * math.pi * k / n),
                 center[1] + radius * math.sin(phase + 2 * math.pi * k / n))
                for k in range(n)
            ]
        )

    @property
    def array(self) -> np.ndarray:
        if self._array is None:
            self._array = np.asarray(self.vertices, dtype=float)
        return self._array

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"ConvexPolygon({list(self.vertices)!r})"

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def centroid(self) -> Point2:
        return polygon_centroid(self)

    def bbox(self) -> Aabb:
        a = self.array
        return Aabb(a[:, 0].min(), a[:, 0].max(), a[:, 1].min(), a[:, 1].max())

    def translate(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon([(x + dx, y + dy) for x, y in self.vertices], validate=False)

    def contains(self, points, tol: float = EPS) -> np.ndarray:
        """Vectorised closed point-in-polygon test for an ``(n, 2)`` array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.array
        b = np.roll(a, -1, axis=0)
        edge = b - a
        # cross(edge, p - a) >= -tol * |edge| for every edge
        rel_x = pts[:, None, 0] - a[None, :, 0]
        rel_y = pts[:, None, 1] - a[None, :, 1]
        cr = edge[None, :, 0] * rel_y - edge[None, :, 1] * rel_x
        lens = np.hypot(edge[:, 0], edge[:, 1])
        return np.all(cr >= -tol * lens[None, :], axis=1)

    def clip(self, a: float, b: float, c: float) -> "ConvexPolygon | None":
        """Intersect with the half-plane ``a*x + b*y <= c``; None if empty."""
        verts = clip_halfplane(list(self.vertices), a, b, c)
        verts = _clean(verts)
        if len(verts) < 3 or _signed_area(verts) <= EPS * EPS:
            return None
        return ConvexPolygon(verts, validate=False)

    def intersect_box(self, box: Aabb) -> "ConvexPolygon | None":
        verts = list(self.vertices)
        for a, b, c in ((1.0, 0.0, box.x_max), (-1.0, 0.0, -box.x_min),
                        (0.0, 1.0, box.y_max), (0.0, -1.0, -box.y_min)):
            verts = clip_halfplane(verts, a, b, c)
            if len(verts) < 3:
                return None
        verts = _clean(verts)
        if len(verts) < 3 or _signed_area(verts) <= EPS * EPS:
            return None
        return ConvexPolygon(verts, validate=False)


def clip_halfplane(verts: list, a: float, b: float, c: float, tol: float = EPS) -> list:
    """Sutherland-Hodgman step keeping ``a*x + b*y <= c`` (inclusive within tol)."""
    norm = math.hypot(a, b)
    a, b, c = a / norm, b / norm, c / norm
    dist = [a * x + b * y - c for x, y in verts]
    if max(dist) <= tol:
        return verts
    out = []
    n = len(verts)
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        dp, dq = dist[i], dist[(i + 1) % n]
        if dp <= tol:
            out.append(p)
        if (dp < -tol and dq > tol) or (dp > tol and dq < -tol):
            t = dp / (dp - dq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def polygon_area(p: ConvexPolygon) -> float:
    return _signed_area(p.vertices)


def polygon_centroid(p: ConvexPolygon) -> Point2:
    a = p.array
    o = a[0]
    rel = a - o
    x0, y0 = rel[:-1, 0], rel[:-1, 1]
    x1, y1 = rel[1:, 0], rel[1:, 1]
    cr = x0 * y1 - x1 * y0
    area = 0.5 * cr.sum()
    cx = ((x0 + x1) * cr).sum() / (6.0 * area)
    cy = ((y0 + y1) * cr).sum() / (6.0 * area)
    return Point2(float(cx + o[0]), float(cy + o[1]))


def polygon_polar_moment(p: ConvexPolygon) -> float:
    """Polar second moment of area about the centroid, in m^4."""
    c = polygon_centroid(p)
    a = p.array - np.array([c.x, c.y])
    b = np.roll(a, -1, axis=0)
    cr = a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]
    ixx = (cr * (a[:, 1] ** 2 + a[:, 1] * b[:, 1] + b[:, 1] ** 2)).sum() / 12.0
    iyy = (cr * (a[:, 0] ** 2 + a[:, 0] * b[:, 0] + b[:, 0] ** 2)).sum() / 12.0
    return float(ixx + iyy)


@lru_cache(maxsize=8)
def _subtriangle_centroids(n: int) -> np.ndarray:
    """Barycentric (u, v) centroids of the n*n congruent subtriangles of a reference triangle."""
    up = [((3 * i + 1) / (3 * n), (3 * j + 1) / (3 * n)) for i in range(n) for j in range(n - i)]
    down = [((3 * i + 2) / (3 * n), (3 * j + 2) / (3 * n)) for i in range(n) for j in range(n - 1 - i)]
    return np.array(up + down)


def polygon_sample_points(p: ConvexPolygon, resolution: int = 64):
    """Equal-mass quadrature nodes covering ``p``.

    Returns ``(points, weights)`` where weights are the subtriangle areas;
    each fan triangle is split into ``resolution**2`` congruent pieces.
    """
    uv = _subtriangle_centroids(resolution)
    a = p.array
    pts, wts = [], []
    for k in range(1, len(a) - 1):
        e1 = a[k] - a[0]
        e2 = a[k + 1] - a[0]
        tri_area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        pts.append(a[0] + uv[:, :1] * e1 + uv[:, 1:] * e2)
        wts.append(np.full(len(uv), tri_area / len(uv)))
    return np.concatenate(pts), np.concatenate(wts)


def weighted_centroid(
    p: ConvexPolygon,
    density: Callable[[np.ndarray], np.ndarray],
    resolution: int = 64,
) -> Point2:
    """Mass-weighted centroid of ``p`` under a non-negative density.

    ``density`` maps an ``(n, 2)`` array of points to ``n`` values.
    """
    pts, wts = polygon_sample_points(p, resolution)
    rho = np.asarray(density(pts), dtype=float)
    if rho.shape != (len(pts),):
        raise ValueError("density must return one value per point")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("density must be finite and non-negative")
    m = rho * wts
    mass = m.sum()
    if mass <= 0.0:
        raise ValueError("density is identically zero on the polygon")
    c = (m[:, None] * pts).sum(axis=0) / mass
    return Point2(float(c[0]), float(c[1]))


def _check_generators(generators, bounds: ConvexPolygon) -> list:
    gens = [(float(g[0]), float(g[1])) for g in generators]
    if not gens:
        raise ValueError("at least one generator is required")
    inside = bounds.contains(np.asarray(gens), tol=-EPS)
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise ValueError(f"generator {bad} at {gens[bad]} is not strictly inside the bounds")
    arr = np.asarray(gens)
    if len(gens) > 1:
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        srt = arr[order]
        close = np.all(np.abs(np.diff(srt, axis=0)) <= EPS, axis=1)
        if np.any(close):
            i = int(order[np.flatnonzero(close)[0]])
            raise ValueError(f"duplicate generator at {gens[i]}")
    return gens


def voronoi_partition(generators, bounds: ConvexPolygon) -> list[ConvexPolygon]:
    """Voronoi cells of ``generators`` clipped to convex ``bounds``.

    Cell ``i`` is built by clipping the bounds with the bisector half-plane
    against every other generator, nearest first.
    """
    gens = _check_generators(generators, bounds)
    arr = np.asarray(gens)
    cells = []
    for i, (gx, gy) in enumerate(gens):
        d2 = (arr[:, 0] - gx) ** 2 + (arr[:, 1] - gy) ** 2
        verts = list(bounds.vertices)
        for j in np.argsort(d2, kind="stable"):
            if j == i:
                continue
            hx, hy = gens[j]
            a, b = hx - gx, hy - gy
            c = 0.5 * (hx * hx + hy * hy - gx * gx - gy * gy)
            verts = clip_halfplane(verts, a, b, c)
        verts = _clean(verts)
        if len(verts) < 3:
            raise ValueError(f"degenerate Voronoi cell for generator {i}")
        cells.append(ConvexPolygon(verts, validate=False))
    return cells


def nearest_generator(points, generators) -> np.ndarray:
    """Index of the nearest generator for every point (ties to the lower index)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gens = np.atleast_2d(np.asarray(generators, dtype=float))
    d2 = ((pts[:, None, :] - gens[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)
