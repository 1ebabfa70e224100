import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skytier.geometry import (
    Aabb,
    ConvexPolygon,
    aabb_overlap,
    nearest_generator,
    polygon_area,
    polygon_centroid,
    polygon_polar_moment,
    voronoi_partition,
    weighted_centroid,
)

from conftest import quad_over_polygon, random_convex_polygon

UNIT = ConvexPolygon.box(0, 0, 1, 1)
TRI = ConvexPolygon([(0, 0), (1, 0), (0, 1)])


@st.composite
def boxes(draw, lo=-50, hi=50):
    x0 = draw(st.integers(lo, hi))
    y0 = draw(st.integers(lo, hi))
    w = draw(st.integers(0, 40))
    h = draw(st.integers(0, 40))
    return Aabb(x0, x0 + w, y0, y0 + h)


def raster_overlap(a, b):
    """Brute force: do the open interiors share a cell of the 1 m grid?"""
    xs = np.arange(-60, 100) + 0.5
    ys = np.arange(-60, 100) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    ina = (gx > a.x_min) & (gx < a.x_max) & (gy > a.y_min) & (gy < a.y_max)
    inb = (gx > b.x_min) & (gx < b.x_max) & (gy > b.y_min) & (gy < b.y_max)
    return bool(np.any(ina & inb))


class TestAabbOverlap:
    def test_disjoint_x(self):
        r = aabb_overlap(Aabb(0, 10, 0, 10), Aabb(20, 30, 0, 10))
        assert (r.x_overlap, r.y_overlap, r.overlapped) == (0, 10, False)

    def test_partial(self):
        r = aabb_overlap(Aabb(0, 10, 0, 10), Aabb(5, 15, 5, 15))
        assert (r.x_overlap, r.y_overlap, r.overlapped) == (5, 5, True)

    def test_identity(self):
        a = Aabb(0, 10, 0, 10)
        r = aabb_overlap(a, a)
        assert (r.x_overlap, r.y_overlap, r.overlapped) == (10, 10, True)

    def test_touching_edges_do_not_overlap(self):
        assert not aabb_overlap(Aabb(0, 10, 0, 10), Aabb(10, 20, 0, 10)).overlapped

    def test_invalid_box(self):
        with pytest.raises(ValueError):
            Aabb(1, 0, 0, 1)

    @given(boxes(), boxes())
    def test_symmetric(self, a, b):
        assert aabb_overlap(a, b) == aabb_overlap(b, a)

    @settings(max_examples=200)
    @given(boxes(), boxes())
    def test_matches_raster(self, a, b):
        r = aabb_overlap(a, b)
        assert r.x_overlap >= 0 and r.y_overlap >= 0
        assert r.overlapped == raster_overlap(a, b)


class TestPolygonMeasures:
    def test_area(self):
        assert polygon_area(UNIT) == pytest.approx(1.0)
        assert polygon_area(TRI) == pytest.approx(0.5)
        hexagon = ConvexPolygon.regular(6, 1.0)
        assert polygon_area(hexagon) == pytest.approx(3 * math.sqrt(3) / 2, rel=1e-12)

    def test_centroid(self):
        assert polygon_centroid(UNIT) == pytest.approx((0.5, 0.5))
        assert polygon_centroid(TRI) == pytest.approx((1 / 3, 1 / 3))

    def test_centroid_translates(self, rng):
        p = ConvexPolygon(random_convex_polygon(rng))
        c = polygon_centroid(p)
        c2 = polygon_centroid(p.translate(5.0, -7.0))
        assert c2 == pytest.approx((c.x + 5.0, c.y - 7.0), abs=1e-12)
        assert p.contains([c]).all()

    def test_polar_moment_square(self):
        assert polygon_polar_moment(UNIT) == pytest.approx(1 / 6, rel=1e-12)
        assert polygon_polar_moment(UNIT.translate(5, 7)) == pytest.approx(1 / 6, rel=1e-12)

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_polar_moment_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        verts = random_convex_polygon(rng, n=5, radius=3.0, center=(2.0, -1.0))
        p = ConvexPolygon(verts)
        c = polygon_centroid(p)
        expected = quad_over_polygon(lambda x, y: (x - c.x) ** 2 + (y - c.y) ** 2, p.vertices)
        assert polygon_polar_moment(p) == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("seed", [4, 5])
    def test_centroid_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        p = ConvexPolygon(random_convex_polygon(rng, n=6, radius=2.0))
        area = quad_over_polygon(lambda x, y: 1.0, p.vertices)
        mx = quad_over_polygon(lambda x, y: x, p.vertices)
        my = quad_over_polygon(lambda x, y: y, p.vertices)
        assert polygon_area(p) == pytest.approx(area, rel=1e-9)
        assert polygon_centroid(p) == pytest.approx((mx / area, my / area), rel=1e-6, abs=1e-9)

    def test_rejects_nonconvex_and_repeats(self):
        with pytest.raises(ValueError):
            ConvexPolygon([(0, 0), (2, 0), (1, 0.1), (2, 2), (0, 2)])
        with pytest.raises(ValueError):
            ConvexPolygon([(0, 0), (1, 0), (1, 0), (0, 1)])
        with pytest.raises(ValueError):
            ConvexPolygon([(0, 0), (1, 0)])

    def test_clockwise_input_reoriented(self):
        p = ConvexPolygon([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert polygon_area(p) == pytest.approx(1.0)


class TestWeightedCentroid:
    def test_uniform(self):
        c = weighted_centroid(UNIT, lambda pts: np.ones(len(pts)))
        assert c == pytest.approx((0.5, 0.5), abs=1e-12)

    def test_spike(self):
        def spike(pts):
            return np.exp(-((pts[:, 0] - 0.9) ** 2 + (pts[:, 1] - 0.9) ** 2) / (2 * 0.01**2))

        c = weighted_centroid(UNIT, spike)
        assert math.hypot(c.x - 0.9, c.y - 0.9) < 0.05

    def test_gaussian_matches_quadrature(self):
        mu, sigma = (0.3, 0.7), 0.1

        def g(x, y):
            return math.exp(-((x - mu[0]) ** 2 + (y - mu[1]) ** 2) / (2 * sigma**2))

        mass = quad_over_polygon(g, UNIT.vertices)
        mx = quad_over_polygon(lambda x, y: x * g(x, y), UNIT.vertices)
        my = quad_over_polygon(lambda x, y: y * g(x, y), UNIT.vertices)

        def field(pts):
            return np.exp(-((pts[:, 0] - mu[0]) ** 2 + (pts[:, 1] - mu[1]) ** 2) / (2 * sigma**2))

        c = weighted_centroid(UNIT, field)
        assert c == pytest.approx((mx / mass, my / mass), abs=1e-4)

    def test_zero_density_rejected(self):
        with pytest.raises(ValueError):
            weighted_centroid(UNIT, lambda pts: np.zeros(len(pts)))


class TestVoronoi:
    def test_single_generator(self):
        cells = voronoi_partition([(0.5, 0.5)], UNIT)
        assert len(cells) == 1
        assert polygon_area(cells[0]) == pytest.approx(1.0)

    def test_two_generators_split(self):
        cells = voronoi_partition([(0.25, 0.5), (0.75, 0.5)], UNIT)
        assert [polygon_area(c) for c in cells] == pytest.approx([0.5, 0.5])
        assert max(v[0] for v in cells[0].vertices) == pytest.approx(0.5)
        assert min(v[0] for v in cells[1].vertices) == pytest.approx(0.5)

    def test_monte_carlo_membership(self):
        rng = np.random.default_rng(7)
        gens = rng.uniform(0.05, 0.95, size=(5, 2))
        cells = voronoi_partition(gens, UNIT)
        samples = rng.uniform(0, 1, size=(10_000, 2))
        owner = nearest_generator(samples, gens)
        for i, cell in enumerate(cells):
            assert cell.contains(samples[owner == i], tol=1e-9).all()
        assert sum(polygon_area(c) for c in cells) == pytest.approx(1.0, rel=1e-9)

    def test_collinear_generators(self):
        gens = [(0.1 * k + 0.05, 0.5) for k in range(10)]
        cells = voronoi_partition(gens, UNIT)
        assert [polygon_area(c) for c in cells] == pytest.approx([0.1] * 10)

    def test_errors(self):
        with pytest.raises(ValueError, match="duplicate"):
            voronoi_partition([(0.5, 0.5), (0.5, 0.5)], UNIT)
        with pytest.raises(ValueError, match="inside"):
            voronoi_partition([(1.5, 0.5)], UNIT)
        with pytest.raises(ValueError, match="inside"):
            voronoi_partition([(1.0, 0.5)], UNIT)
        with pytest.raises(ValueError):
            voronoi_partition([], UNIT)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_partition_properties(self, n, seed):
        rng = np.random.default_rng(seed)
        bounds = ConvexPolygon.regular(7, 100.0, phase=0.3)
        gens = []
        while len(gens) < n:
            p = rng.uniform(-100, 100, 2)
            if bounds.contains([p], tol=-1e-3)[0]:
                gens.append(p)
        cells = voronoi_partition(gens, bounds)
        areas = np.array([polygon_area(c) for c in cells])
        assert np.all(areas > 0)
        assert areas.sum() == pytest.approx(polygon_area(bounds), rel=1e-9)
        for i in range(n):
            for j in range(i + 1, n):
                inter = cells[i]
                for k in range(len(cells[j])):
                    (x0, y0), (x1, y1) = cells[j].vertices[k], cells[j].vertices[(k + 1) % len(cells[j])]
                    # half-plane left of the CCW edge
                    inter = inter.clip(y1 - y0, x0 - x1, (y1 - y0) * x0 + (x0 - x1) * y0)
                    if inter is None:
                        break
                assert inter is None or polygon_area(inter) < 1e-9
