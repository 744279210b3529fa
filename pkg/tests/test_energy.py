import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasnet.energy import (EEReport, FlightState, cruise_energy, cruise_speed, flight_energy,
                           flight_power, kinetic_delta, segment_ee, total_ee)
from sasnet.scenario import ScenarioConfig, energy_params


@pytest.fixture
def params():
    return energy_params(ScenarioConfig(v_min=1.0, v_max=100.0))


def test_cruise_argmin_grid_scan(params):
    v = np.linspace(1.0, 100.0, 2_000_001)
    v_grid = v[np.argmin(cruise_energy(v, params))]
    closed = (params.zeta / (3 * params.kappa)) ** 0.25
    assert v_grid == pytest.approx(closed, rel=1e-3)
    assert cruise_speed(params) == pytest.approx(closed, rel=1e-12)


def test_cruise_energy_convex(params):
    v = np.linspace(5.0, 80.0, 100)
    e = cruise_energy(v, params)
    assert np.all(e[:-2] - 2 * e[1:-1] + e[2:] >= 0)


def test_cruise_speed_clipped():
    p = energy_params(ScenarioConfig(v_min=40.0, v_max=50.0))
    assert cruise_speed(p) == 40.0


def test_flight_energy_terms(params):
    v, mu = 20.0, 1.5
    dk = kinetic_delta(params.payload_mass, [10.0, 0, 0], [12.0, 0, 0])
    assert dk == pytest.approx(0.5 * params.payload_mass * (144 - 100))
    e = flight_energy(FlightState(v, mu, dk), params)
    expected = (params.kappa * v**3 + params.zeta / v
                + params.zeta * mu**2 / (params.gravity**2 * v) + dk / params.time_step)
    assert e == pytest.approx(expected, rel=1e-14)


def test_flight_energy_needs_speed(params):
    with pytest.raises(ValueError):
        flight_energy(FlightState(0.0), params)
    with pytest.raises(ValueError):
        cruise_energy([10.0, -1.0], params)


def test_flight_power_forms():
    assert flight_power(100.0, 50.0) == 2.0
    assert flight_power(100.0, 50.0, literal=True) == 5000.0
    with pytest.raises(ValueError):
        flight_power(1.0, 0.0)


def test_segment_ee():
    assert segment_ee(0.0, 0.0) == 0.0
    assert segment_ee(10.0, 4.0) == 2.5
    with pytest.raises(ValueError):
        segment_ee(1.0, 0.0)


def test_total_is_sum_of_segments():
    r = EEReport(1.0, 2.0, 3.5)
    assert total_ee(r) == r.eta_total == 6.5


@settings(max_examples=100, deadline=None)
@given(R=st.lists(st.floats(0, 1e6), min_size=1, max_size=6),
       P=st.lists(st.floats(1e-3, 1e3), min_size=6, max_size=6))
def test_ratio_of_sums_between_link_ratios(R, P):
    P = P[:len(R)]
    ee = segment_ee(sum(R), sum(P))
    ratios = [r / p for r, p in zip(R, P)]
    assert min(ratios) - 1e-9 * max(1, ee) <= ee <= max(ratios) + 1e-9 * max(1, ee)
