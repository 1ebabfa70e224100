import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skytier.drones import MAX_ALTITUDE, MIN_ALTITUDE, Drone
from skytier.geometry import Aabb, aabb_overlap
from skytier.mobility import (
    Coordinator,
    InfeasiblePackingError,
    MovePlan,
    Topology,
    coordinator_for,
    enforce_separation,
    overlapping_pairs,
    plan_waypoints,
)
from skytier.survivability import DroneResources


class TestPlanWaypoints:
    def test_stationary(self):
        p = plan_waypoints((5, 5, 80), (5, 5, 80), 15, 1)
        assert len(p.waypoints) == 1
        assert p.final.position == (5, 5) and p.final.altitude == 80

    def test_straight_hundred_meters(self):
        p = plan_waypoints((0, 0, 100), (100, 0, 100), 10, 1)
        steps = [b.position[0] - a.position[0] for a, b in zip(p.waypoints, p.waypoints[1:])]
        assert steps == pytest.approx([10.0] * 10)
        assert p.final.time == 10

    @settings(deadline=None)
    @given(
        st.tuples(st.floats(-2e3, 2e3), st.floats(-2e3, 2e3), st.floats(MIN_ALTITUDE, MAX_ALTITUDE)),
        st.tuples(st.floats(-2e3, 2e3), st.floats(-2e3, 2e3), st.floats(MIN_ALTITUDE, MAX_ALTITUDE)),
        st.floats(2, 30),
        st.floats(0.5, 5),
    )
    def test_length_and_speed(self, a, b, v, dt):
        p = plan_waypoints(a, b, v, dt)
        assert p.path_length() == pytest.approx(math.dist(a, b), rel=1e-9, abs=1e-9)
        assert tuple(p.final.position) + (p.final.altitude,) == tuple(map(float, b))
        for u, w in zip(p.waypoints, p.waypoints[1:]):
            step = math.dist((*u.position, u.altitude), (*w.position, w.altitude))
            assert step <= v * dt * (1 + 1e-9)
            assert w.time > u.time
            assert MIN_ALTITUDE - 1e-9 <= w.altitude <= MAX_ALTITUDE + 1e-9

    def test_invalid(self):
        with pytest.raises(ValueError):
            plan_waypoints((0, 0, 80), (1, 0, 80), 0, 1)


def stationary(i, x, y, n=3):
    return plan_waypoints((x, y, 80), (x, y, 80), 10, 1, drone_id=i).hold_until(n - 1, 1)


class TestSeparation:
    def test_disjoint_unchanged(self):
        plans = [stationary(0, 0, 0), stationary(1, 100, 0)]
        out = enforce_separation(plans, {0: 10.0, 1: 10.0}, tier=2)
        assert out[0] is plans[0] and out[1] is plans[1]

    def test_coincident(self):
        plans = [stationary(0, 0, 0), stationary(1, 0, 0)]
        out = enforce_separation(plans, {0: 10.0, 1: 10.0}, tier=2)
        assert out[0] is plans[0]
        for w0, w1 in zip(out[0].waypoints, out[1].waypoints):
            dx = abs(w0.position[0] - w1.position[0])
            dy = abs(w0.position[1] - w1.position[1])
            assert max(dx, dy) >= 10.0
            assert not aabb_overlap(Aabb.around(w0.position, 10), Aabb.around(w1.position, 10)).overlapped

    def test_minimal_axis_shift(self):
        plans = [stationary(0, 0, 0), stationary(1, 4, 1)]
        out = enforce_separation(plans, {0: 10.0, 1: 10.0}, tier=2)
        p = out[1].final.position
        # moved along (4, 1) until x-overlap closes: x = 10
        assert p[0] == pytest.approx(10.0, abs=1e-6) and p[1] == pytest.approx(2.5, abs=1e-6)

    def test_later_id_yields_regardless_of_order(self):
        plans = [stationary(1, 0, 0), stationary(0, 3, 0)]
        out = enforce_separation(plans, {0: 10.0, 1: 10.0}, tier=2)
        assert out[1] is plans[1]
        assert out[0].final.position != plans[0].final.position

    def test_infeasible(self):
        plans = [stationary(i, 0, 0) for i in range(4)]
        with pytest.raises(InfeasiblePackingError) as exc:
            enforce_separation(plans, {i: 10.0 for i in range(4)}, tier=2, zone_area=300.0)
        assert exc.value.pair == (0, 1)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_random_plans_repaired_and_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        plans, fps = [], {}
        for i in range(5):
            a = (*rng.uniform(0, 200, 2), rng.uniform(MIN_ALTITUDE, MAX_ALTITUDE))
            b = (*rng.uniform(0, 200, 2), a[2])
            plans.append(plan_waypoints(a, b, 15, 1, drone_id=i).hold_until(20, 1))
            fps[i] = 2 * a[2] * 0.2594
        out = enforce_separation(plans, fps, tier=2)
        assert overlapping_pairs(out, fps) == []
        again = enforce_separation(out, fps, tier=2)
        assert [p.waypoints for p in again] == [p.waypoints for p in out]


class TestCoordinator:
    def _topo(self):
        res = DroneResources(radio_range=1000.0)
        t1 = Drone(0, 1, (0, 0), 150.0, res)
        return Topology(mbs={0: (0, 0)}, tiers={1: [t1]}), res

    def test_tier2_in_range(self):
        topo, res = self._topo()
        assert coordinator_for(Drone(5, 2, (300, 0), 80.0), topo) == Coordinator("abs", 0)

    def test_tier2_out_of_range(self):
        topo, res = self._topo()
        assert coordinator_for(Drone(5, 2, (2000, 0), 80.0), topo) == Coordinator("mbs", 0)

    def test_tier1(self):
        topo, res = self._topo()
        assert coordinator_for(topo.tiers[1][0], topo) == Coordinator("mbs", 0)

    def test_isolated(self):
        topo = Topology(mbs={}, tiers={})
        with pytest.raises(RuntimeError):
            coordinator_for(Drone(1, 2, (0, 0), 80.0), topo)
