import math

import numpy as np
import pytest
from scipy import integrate


def vertical_extent(verts, x):
    """Lower/upper y of a convex polygon along the vertical line at ``x``."""
    ys = []
    n = len(verts)
    for i in range(n):
        (x0, y0), (x1, y1) = verts[i], verts[(i + 1) % n]
        if x0 == x1:
            if x0 == x:
                ys += [y0, y1]
            continue
        t = (x - x0) / (x1 - x0)
        if -1e-12 <= t <= 1 + 1e-12:
            ys.append(y0 + t * (y1 - y0))
    return min(ys), max(ys)


def quad_over_polygon(func, verts, epsabs=1e-12, epsrel=1e-10):
    """Integrate ``func(x, y)`` over a convex polygon with adaptive quadrature."""
    xs = [v[0] for v in verts]
    # split at vertex abscissae so each strip has smooth boundary curves
    knots = sorted(set(xs))
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = integrate.dblquad(
            lambda y, x: func(x, y),
            a,
            b,
            lambda x: vertical_extent(verts, x)[0],
            lambda x: vertical_extent(verts, x)[1],
            epsabs=epsabs,
            epsrel=epsrel,
        )
        total += val
    return total


def random_convex_polygon(rng, n=5, radius=1.0, center=(0.0, 0.0)):
    angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    # keep gaps below pi so the polygon contains its center
    while np.max(np.diff(np.r_[angles, angles[0] + 2 * math.pi])) >= math.pi * 0.9:
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
    rx, ry = radius, radius * rng.uniform(0.5, 1.0)
    return [(center[0] + rx * math.cos(a), center[1] + ry * math.sin(a)) for a in angles]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
