import numpy as np
import pytest

from sasnet.admm import (AbsNodeData, BarrierError, Message, _collect, abs_local_gradient,
                         abs_local_objective, augmented_lagrangian, dual_update, global_update,
                         power_local_step, quadratic_toy, run_admm, run_consensus, solve_segment)
from sasnet.problems import Association, Segment, check_feasibility

TOY_FAMILY = [(1.0, 3.0, -1.0, 2.0), (2.0, -1.0, 0.0, 5.0), (0.5, 0.7, -10.0, 10.0), (4.0, 10.0, 0.0, 1.0)]


@pytest.mark.parametrize("a,c,lo,hi", TOY_FAMILY)
def test_toy_reaches_closed_form(a, c, lo, hi):
    res = quadratic_toy(a, c, lo, hi, tol=1e-7)
    assert res.converged and res.iterations < 200
    opt = min(max(c, lo), hi)
    assert abs(res.globals_[0] - opt) <= 1e-6
    assert abs(res.locals_[0] - opt) <= 1e-6


@pytest.mark.parametrize("a,c,lo,hi", TOY_FAMILY)
def test_toy_iterations_within_inverse_square(a, c, lo, hi):
    eps = [1e-1, 1e-2, 1e-3]
    its = [quadratic_toy(a, c, lo, hi, tol=e).iterations for e in eps]
    const = its[0] * eps[0] ** 2
    for e, n in zip(eps, its):
        assert n <= const / e**2


def test_residual_trace_shape():
    res = quadratic_toy(1.0, 3.0, -1.0, 2.0, tol=1e-4)
    ts = [t for t, _, _ in res.trace]
    assert ts == list(range(1, res.iterations + 1))
    assert res.trace[-1][1] <= 1e-4 and res.trace[-1][2] <= 1e-4


def test_rho_must_be_positive():
    with pytest.raises(ValueError):
        global_update([1.0], [0.0], 0.0)
    with pytest.raises(ValueError):
        quadratic_toy(1.0, 1.0, rho=-1.0)


def test_lagrangian_and_updates():
    assert augmented_lagrangian(2.0, [1.0, 2.0], [0.0, 2.0], [3.0, 5.0], 4.0) == 2.0 + 3.0 + 2.0
    with pytest.raises(ValueError):
        augmented_lagrangian(0.0, [1.0], [1.0, 2.0], [0.0], 1.0)
    z = global_update([1.0, 2.0], [2.0, -2.0], 2.0, project=lambda v: np.clip(v, 0, 1.5))
    assert np.allclose(z, [1.5, 1.0])
    assert np.allclose(dual_update([0.0, 1.0], [1.0, 1.0], [2.0, 0.0], 0.5), [0.5, 0.5])


def test_barrier_rejects_stale_and_missing():
    sl = [slice(0, 1), slice(1, 2)]
    with pytest.raises(BarrierError, match="tagged 2"):
        _collect([Message(3, 0, np.ones(1)), Message(2, 1, np.ones(1))], 3, sl, 2)
    with pytest.raises(BarrierError, match=r"\[1\]"):
        _collect([Message(1, 0, np.ones(1))], 1, sl, 2)


def test_consensus_two_nodes_shared_box():
    # two independent quadratics; controller clips the sum vector to [0, 1]
    steps = [lambda z, phi, r: (2 * 3.0 - phi + r * z) / (2 + r),
             lambda z, phi, r: (1 * -2.0 - phi + r * z) / (1 + r)]
    res = run_consensus(steps, [slice(0, 1), slice(1, 2)], np.zeros(2),
                        project=lambda v: np.clip(v, 0, 1), tol=1e-8)
    assert res.converged
    assert np.allclose(res.globals_, [1.0, 0.0], atol=1e-7)


@pytest.mark.parametrize("seed", range(20))
def test_power_step_matches_grid(seed):
    rng = np.random.default_rng(seed)
    snr = 10 ** rng.uniform(-1, 3)
    eta, z, phi, rho = rng.uniform(0, 3), rng.uniform(0, 2), rng.normal(), 10 ** rng.uniform(-1, 1)
    lo, hi = 0.0, rng.uniform(0.5, 3)
    p = np.linspace(lo, hi, 400_001)
    f = np.log2(1 + snr * p) - eta * p - phi * (p - z) - rho / 2 * (p - z) ** 2
    got = float(power_local_step(np.array([snr]), lo, hi, eta, np.array([z]), np.array([phi]), rho)[0])
    assert got == pytest.approx(p[np.argmax(f)], abs=2 * (hi - lo) / 400_000)


def _node(rng, L=2, N=3):
    lue = rng.uniform(-1, 1, (L, N, 3))
    lue[..., 2] = 0
    pos = rng.uniform(-1, 1, (N, 3))
    pos[:, 2] = 0.1
    D_loc = np.sum((pos[None] - lue) ** 2, axis=-1) * rng.uniform(0.8, 1.2, (L, N))
    data = AbsNodeData(c=10 ** rng.uniform(0, 3, (L, N)), lue=lue, share=np.full((L, N), 5.0),
                       target=0.1, D_loc=D_loc, pins=pos[0], region=10.0, h_box=(0.05, 0.2),
                       step=1.0, p_max=2.0)
    return data, pos


@pytest.mark.parametrize("seed", range(10))
def test_abs_gradient_matches_differences(seed):
    rng = np.random.default_rng(seed)
    data, pos = _node(rng)
    L, N = data.c.shape
    p = rng.uniform(0.1, 1.5, (L, N))
    size = L * N + 2 * N
    z, phi, rho, eta = rng.normal(size=size), rng.normal(size=size), 0.7, 0.3
    gp, gpos = abs_local_gradient(data, eta, p, pos, z, phi, rho)
    f = lambda pp, qq: abs_local_objective(data, eta, pp, qq, z, phi, rho)
    h = 1e-6
    for idx in np.ndindex(L, N):
        e = np.zeros_like(p)
        e[idx] = h
        fd = (f(p + e, pos) - f(p - e, pos)) / (2 * h)
        assert gp[idx] == pytest.approx(fd, rel=1e-5, abs=1e-7)
    for n in range(N):
        for k in range(2):
            e = np.zeros_like(pos)
            e[n, k] = h
            fd = (f(p, pos + e) - f(p, pos - e)) / (2 * h)
            assert gpos[n, k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def _sat_assoc(desk):
    a = Association.empty(desk)
    a.sat_hue[0, 0] = True
    a.sat_abs[1, 0] = True
    return a


def test_sat_segment_admm_feasible_and_converged(desk, desk_problems):
    spec = desk_problems[Segment.SAT]
    a = _sat_assoc(desk)
    res = solve_segment(spec, a)
    assert res.converged
    for trace in res.admm_traces:
        _, pr, du = trace[-1]
        assert pr <= 1e-4 and du <= 1e-4
    assert check_feasibility(spec, a, res.allocation) == []
    etas = [eta for _, eta, _ in res.dinkelbach.trace]
    assert all(b >= a for a, b in zip(etas, etas[1:]))


def test_run_admm_rejects_bad_rho(desk, desk_problems):
    with pytest.raises(ValueError):
        run_admm(desk_problems[Segment.SAT], _sat_assoc(desk), 0.0, rho=0.0)


def test_empty_association_has_zero_ee(desk, desk_problems):
    res = solve_segment(desk_problems[Segment.CBS], Association.empty(desk))
    assert res.eta_hat == 0.0 and res.converged
