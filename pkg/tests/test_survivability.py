import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skytier.drones import Drone
from skytier.survivability import (
    ConnectionCensus,
    DroneResources,
    ResourceModel,
    SurvivabilityMatrix,
    census_active,
    drone_survivability,
    layer_survivability,
    matrix_update,
    resource_index,
    simulate_depletion,
    survivability_report,
    total_survivability,
)

INIT = DroneResources(memory=1.0, energy=1000.0, radio_range=500.0, transmission_time=0.01)


class TestResourceIndex:
    def test_identity(self):
        assert resource_index(INIT, INIT, 5, 5) == 1.0

    def test_energy_exhausted(self):
        r = DroneResources(1.0, 0.0, 500.0, 0.01)
        assert resource_index(r, INIT, 5, 5) == 0.0

    def test_half_memory_half_energy(self):
        r = DroneResources(0.5, 500.0, 500.0, 0.01)
        assert resource_index(r, INIT, 5, 5) == pytest.approx((0.5 * 0.5 * 1 * 1) ** 0.25, rel=1e-12)
        assert resource_index(r, INIT, 5, 5) == pytest.approx(0.70710678, rel=1e-8)

    def test_load_damping(self):
        assert resource_index(INIT, INIT, 10, 5) == pytest.approx(0.5)

    def test_invalid_initial(self):
        with pytest.raises(ValueError):
            resource_index(INIT, DroneResources(1.0, 0.0, 1.0, 1.0), 5)


class TestDroneSurvivability:
    def test_no_decay(self):
        assert drone_survivability(0.8, 0.8, 10) == 0.0

    def test_log_identity(self):
        assert drone_survivability(0.9 * math.exp(-2), 0.9, 2) == pytest.approx(1.0, rel=1e-12)

    def test_half(self):
        assert drone_survivability(0.5, 1.0, 1) == pytest.approx(math.log(2), rel=1e-12)

    @pytest.mark.parametrize("args", [(0.0, 1.0, 1.0), (0.5, 1.0, 0.0), (0.5, 1.0, -1.0)])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            drone_survivability(*args)

    @given(st.floats(1e-6, 1.0), st.floats(1e-3, 1e6))
    def test_zero_at_f0(self, f0, t):
        assert drone_survivability(f0, f0, t) == 0.0


def full(n):
    return ConnectionCensus(n, n)


class TestProducts:
    def test_layer_examples(self):
        assert layer_survivability([(1.0, full(3)), (1.0, full(4))]) == 1.0
        assert layer_survivability([(0.9, full(3)), (0.9, full(4))]) == pytest.approx(0.81)
        with pytest.raises(ValueError):
            layer_survivability([])

    def test_layer_random_oracle(self):
        rng = np.random.default_rng(0)
        terms = rng.uniform(0, 2, 5)
        tot = rng.integers(1, 20, 5)
        act = [rng.integers(0, t + 1) for t in tot]
        oracle = 1.0
        for s, a, t in zip(terms, act, tot):
            oracle = oracle * (s * a / t)
        got = layer_survivability([(s, ConnectionCensus(int(t), int(a))) for s, a, t in zip(terms, act, tot)])
        assert got == pytest.approx(oracle, abs=1e-12, rel=1e-12)

    def test_total_examples(self):
        assert total_survivability([(1.0, 4, 4)], 4) == 1.0
        assert total_survivability([(0.9, 2, 4), (0.9, 2, 4)], 4) == pytest.approx(0.2025)
        with pytest.raises(ValueError):
            total_survivability([(1.0, 0, 0)], 0)

    def test_total_random_oracle(self):
        rng = np.random.default_rng(1)
        fleet = 12
        layers = [(float(rng.uniform(0, 1)), int(rng.integers(0, 5)), 4) for _ in range(3)]
        oracle = reduce(lambda acc, l: acc * l[0] * l[1] / fleet, layers, 1.0)
        assert total_survivability(layers, fleet) == pytest.approx(oracle, abs=1e-12)

    def test_normalized_uses_layer_size(self):
        assert total_survivability([(1.0, 1, 1), (1.0, 10, 10)], 11, mode="normalized") == 1.0

    def test_multiplicative_identity(self):
        base = [(0.7, ConnectionCensus(5, 3)), (0.4, ConnectionCensus(2, 2))]
        assert layer_survivability(base + [(1.0, full(9))]) == layer_survivability(base)

    def test_zero_user_census_neutral(self):
        assert ConnectionCensus(0, 0).fraction == 1.0


def make_drone(pos=(0.0, 0.0), alt=100.0, res=INIT):
    return Drone(0, 2, pos, alt, res)


class TestCensus:
    def test_all_in_range(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(-100, 100, (20, 2))
        req = rng.poisson(5, 20)
        c = census_active(make_drone(), pos, req, np.arange(20))
        assert c.active == c.total == 20

    def test_energy_below_transmission_cost(self):
        model = ResourceModel()
        res = DroneResources(1.0, 0.5 * model.p_tx * INIT.transmission_time, 500.0, 0.01)
        c = census_active(make_drone(res=res), np.zeros((5, 2)), np.ones(5, int), np.arange(5), model)
        assert (c.total, c.active) == (5, 0)

    def test_mixed_instance_matches_predicate(self):
        rng = np.random.default_rng(4)
        ang = rng.uniform(0, 2 * math.pi, 10)
        radius = np.r_[rng.uniform(0, 400, 7), rng.uniform(600, 900, 3)]
        pos = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
        req = np.full(10, 5)
        drone = make_drone()
        c = census_active(drone, pos, req, np.arange(10))

        def predicate(i):
            d = math.sqrt(pos[i, 0] ** 2 + pos[i, 1] ** 2 + drone.altitude**2)
            return d <= drone.resources.radio_range

        assert c.active == sum(predicate(i) for i in range(10)) == 7

    def test_buffer_limits_admission(self):
        model = ResourceModel(buffer_capacity=12)
        pos = np.array([[10.0, 0], [20.0, 0], [30.0, 0]])
        c = census_active(make_drone(), pos, np.array([5, 5, 5]), [0, 1, 2], model)
        assert c.active == 2 and list(c.active_users) == [0, 1]

    @given(st.integers(0, 30), st.integers(0, 2**31))
    def test_active_never_exceeds_total(self, n, seed):
        rng = np.random.default_rng(seed)
        pos = rng.uniform(-1000, 1000, (n, 2))
        req = rng.poisson(8, n)
        res = DroneResources(rng.uniform(0, 1), rng.uniform(0, 10), 600.0, 0.01)
        c = census_active(make_drone(res=res), pos, req, np.arange(n), ResourceModel(buffer_capacity=50))
        assert 0 <= c.active <= c.total == n


class TestMatrix:
    def test_update_read_back(self):
        m = SurvivabilityMatrix(3, 2)
        assert matrix_update(m, 1, 0, 5.0, 0.6, True) is m
        assert m.entry(1, 0) == (5.0, 0.6, True)
        assert m.entry(0, 0) == (0.0, 1.0, False)

    def test_no_flags_when_healthy(self):
        m = SurvivabilityMatrix(2, 3)
        for i in range(2):
            for j in range(3):
                m.update(i, j, 1.0, 1.0, True)
        assert m.support_requests() == []

    def test_low_row_flagged(self):
        m = SurvivabilityMatrix(2, 3)
        for j, f in enumerate([0.1, 0.15, 0.2]):
            m.update(0, j, 1.0, f, True)
        assert np.mean([0.1, 0.15, 0.2]) < 0.2
        assert m.support_requests() == [0]

    def test_time_regression(self):
        m = SurvivabilityMatrix(1, 1)
        m.update(0, 0, 5.0, 1.0, True)
        with pytest.raises(ValueError):
            m.update(0, 0, 4.0, 1.0, True)
        with pytest.raises(IndexError):
            m.update(1, 0, 6.0, 1.0, True)


def test_depletion_run_monotone():
    rng = np.random.default_rng(9)
    pos = rng.uniform(0, 1000, (200, 2))
    req = rng.poisson(5, 200)
    res = DroneResources(1.0, 3000.0, 400.0, 0.01)
    tiers = [[Drone(0, 1, (500, 500), 120.0, res)], [Drone(i, 2, rng.uniform(100, 900, 2), 80.0, res) for i in range(1, 5)]]
    links = {d.id: np.arange(i * 40, (i + 1) * 40) for i, d in enumerate(tiers[1])}
    links[0] = np.zeros(0, dtype=int)
    model = ResourceModel(buffer_capacity=150, memory_per_request=2e-3)
    reports = simulate_depletion(tiers, pos, req, links, 30, 1.0, 5.0, model)
    totals = [r.total for r in reports]
    assert all(0.0 <= s <= 1.0 for s in totals)
    assert all(b <= a for a, b in zip(totals, totals[1:]))
    assert totals[-1] == 0.0  # 3000 J at 155 W is gone after ~19 s


class TestConnectionIndex:
    def test_census_fraction_drives_terms(self):
        res = DroneResources(1.0, 5e5, 750.0, 0.01)
        tiers = [[Drone(0, 1, (0, 0), 100.0, res), Drone(1, 1, (0, 0), 100.0, res)]]
        censuses = {0: ConnectionCensus(4, 2), 1: ConnectionCensus(5, 5)}
        rep = survivability_report(tiers, censuses, {}, 10.0, 100.0, 5.0, index="connection")
        assert [round(ft, 12) for _, ft, _ in rep.per_drone] == [0.5, 1.0]
        # normalized term 0.5 times census fraction 0.5
        assert rep.per_layer == [pytest.approx(0.25)]
        lit = survivability_report(tiers, censuses, {}, 10.0, 100.0, 5.0, mode="literal", index="connection")
        assert lit.per_drone[0][2] == pytest.approx(math.log(2) / 10.0)

    def test_unknown_source(self):
        with pytest.raises(ValueError):
            survivability_report([[Drone(0, 1, (0, 0), 100.0)]], {0: ConnectionCensus(1, 1)}, {0: 1.0}, 1.0, 2.0,
                                 5.0, index="battery")
