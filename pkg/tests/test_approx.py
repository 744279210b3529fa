import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasnet.approx import (distance_linearization, exact_rate_sq, rate_lb_grad_D,
                           rate_lb_grad_p, rate_lb_normalized, rate_lower_bound)
from sasnet.channel import shannon_rate


def _rand_points(rng, n):
    return rng.uniform(-2000, 2000, (n, 3)) * np.array([1, 1, 0.05])


def test_rate_bound_equals_exact_at_expansion():
    d_u = np.array([100.0, 50.0, 30.0])
    d_ml = np.array([300.0, -20.0, 0.0])
    p, om, s2, B, g0 = 0.7, 1e-17, 4e-17, 1e4, 6e-7
    g = g0 / np.sum((d_u - d_ml) ** 2)
    exact = shannon_rate(B, p * g / (om + s2))
    assert rate_lower_bound(p, d_u, d_ml, d_u, om, s2, B, g0) == pytest.approx(exact, rel=1e-15)


def test_rate_bound_zero_power():
    rng = np.random.default_rng(1)
    a, b, c = _rand_points(rng, 3)
    assert rate_lower_bound(0.0, a, b, c, 0.0, 1e-16, 1e4, 6e-7) == 0.0


def test_rate_bound_coincident_raises():
    with pytest.raises(ZeroDivisionError):
        rate_lower_bound(1.0, [0, 0, 0], [0, 0, 0], [1, 0, 0], 0.0, 1.0, 1.0, 1.0)


def test_rate_bound_never_exceeds_exact_sampled():
    rng = np.random.default_rng(2024)
    n = 10_000
    d_u, d_loc, d_ml = _rand_points(rng, n), _rand_points(rng, n), _rand_points(rng, n)
    d_u[:, 2] += 30
    d_loc[:, 2] += 30
    p = rng.uniform(0, 2, n)
    c = 10 ** rng.uniform(2, 9, n)
    D = np.sum((d_u - d_ml) ** 2, axis=1)
    D_loc = np.sum((d_loc - d_ml) ** 2, axis=1)
    lb = rate_lb_normalized(p, D, D_loc, c)
    assert np.all(lb <= exact_rate_sq(p, D, c) + 1e-9)


def test_rate_bound_coefficients_match_central_differences():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = rng.uniform(0.05, 2)
        D_loc = rng.uniform(1e3, 1e6)
        c = D_loc * 10 ** rng.uniform(-1, 3)
        # slope in D of the exact rate at the expansion point
        h = 1e-4 * D_loc
        fd_D = (exact_rate_sq(p, D_loc + h, c) - exact_rate_sq(p, D_loc - h, c)) / (2 * h)
        assert rate_lb_grad_D(p, D_loc, c) == pytest.approx(fd_D, rel=1e-6)
        hp = 1e-5 * p
        fd_p = (rate_lb_normalized(p + hp, D_loc, D_loc, c)
                - rate_lb_normalized(p - hp, D_loc, D_loc, c)) / (2 * hp)
        assert rate_lb_grad_p(p, D_loc, D_loc, c) == pytest.approx(fd_p, rel=1e-6)


def test_distance_linearization_examples():
    assert distance_linearization([3, 4, 0], [0, 0, 0], [3, 4, 0], [0, 0, 0]) == pytest.approx(25.0)
    # D0 = (1,0), D = (2,0): -1 + 2*2 = 3 <= 4
    assert distance_linearization([2, 0], [0, 0], [1, 0], [0, 0]) == pytest.approx(3.0)


def test_distance_linearization_lower_bound_sampled():
    rng = np.random.default_rng(99)
    n = 10_000
    di, dj, li, lj = (rng.uniform(-1e3, 1e3, (n, 3)) for _ in range(4))
    lb = distance_linearization(di, dj, li, lj)
    exact = np.sum((di - dj) ** 2, axis=1)
    assert np.all(lb <= exact + 1e-9)
    assert np.allclose(distance_linearization(li, lj, li, lj), np.sum((li - lj) ** 2, axis=1),
                       rtol=1e-15, atol=0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=12, max_size=12))
def test_distance_linearization_gradient(vals):
    di, dj, li, lj = (np.array(vals[i:i + 3]) for i in range(0, 12, 3))
    delta0 = li - lj
    f = lambda x: float(np.sum((x - lj) ** 2))
    h = 1e-3
    fd = np.array([(f(li + h * e) - f(li - h * e)) / (2 * h) for e in np.eye(3)])
    grad = np.array([distance_linearization(li + e, lj, li, lj) - distance_linearization(li, lj, li, lj)
                     for e in np.eye(3)])
    assert np.allclose(grad, 2 * delta0, atol=1e-9)
    assert np.allclose(grad, fd, rtol=1e-6, atol=1e-6)
