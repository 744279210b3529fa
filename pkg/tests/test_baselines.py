import dataclasses
import itertools

import numpy as np
import pytest

from sasnet.baselines import (AlgorithmTag, Grids, brute_force_oracle, centralized_solve,
                              dynamic_solve, greedy_solve, max_weight_matching, power_levels,
                              random_solve, solve)
from sasnet.problems import Segment, check_feasibility
from sasnet.scenario import generate_scenario


def _brute_matching(S):
    r, c = S.shape
    best = 0.0
    for k in range(min(r, c) + 1):
        for rows in itertools.combinations(range(r), k):
            for cols in itertools.permutations(range(c), k):
                vals = [S[i, j] for i, j in zip(rows, cols)]
                if all(np.isfinite(vals)):
                    best = max(best, float(sum(vals)))
    return best


def test_matching_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(100):
        r, c = rng.integers(1, 7, 2)
        S = rng.uniform(-2, 10, (r, c))
        S[rng.random((r, c)) < 0.3] = -np.inf
        pairs = max_weight_matching(S)
        assert len({i for i, _ in pairs}) == len(pairs) == len({j for _, j in pairs})
        assert all(np.isfinite(S[i, j]) for i, j in pairs)
        assert sum(S[i, j] for i, j in pairs) == pytest.approx(_brute_matching(S), abs=1e-9)


def test_matching_degenerate():
    assert max_weight_matching(np.zeros((0, 3))) == []
    assert max_weight_matching(np.full((2, 2), -np.inf)) == []


def test_power_levels_nest_and_respect_box():
    snr = np.array([[50.0, 3.0]])
    lo, hi = np.array([[0.1, 0.0]]), np.array([[1.5, 2.0]])
    a = power_levels(snr, lo, hi, Grids(16))
    b = power_levels(snr, lo, hi, Grids(32))
    for x in a[~np.isnan(a)]:
        assert np.any(np.isclose(b, x, rtol=1e-12))
    ok = a[~np.isnan(a)]
    assert ok.min() >= 0.0 and ok.max() <= 2.0
    assert np.all(np.isnan(power_levels(snr, hi + 1, hi, Grids(8))))


@pytest.fixture(scope="module")
def tiny(tiny_cfg):
    return generate_scenario(tiny_cfg, 3)


@pytest.mark.parametrize("tag", [AlgorithmTag.Greedy, AlgorithmTag.Random, AlgorithmTag.Dynamic,
                                 AlgorithmTag.Centralized])
def test_deterministic(desk, tag):
    a, b = solve(tag, desk, 7), solve(tag, desk, 7)
    assert a.report == b.report
    assert np.array_equal(a.allocation.p_abs, b.allocation.p_abs)


def test_random_depends_on_run_seed(desk):
    assert random_solve(desk, 1).report != random_solve(desk, 2).report


@pytest.mark.parametrize("tag", list(AlgorithmTag)[:5])
def test_outputs_are_feasible(desk, desk_problems, tag):
    sol = solve(tag, desk, 3)
    for seg, spec in desk_problems.items():
        assert check_feasibility(spec, sol.association, sol.allocation) == []


def test_centralized_equals_oracle_single_link(tiny_cfg):
    cfg = dataclasses.replace(tiny_cfg, lue_count=1, hue_count=1)
    for seed in range(3):
        s = generate_scenario(cfg, seed)
        grids = Grids(16, None, 9)
        c = centralized_solve(s, grids).eta_total
        o = brute_force_oracle(s, grids)
        assert c == pytest.approx(o, rel=1e-9, abs=1e-12)


def test_refined_grid_never_worse(tiny):
    coarse = centralized_solve(tiny, Grids(8, None, 9)).eta_total
    fine = centralized_solve(tiny, Grids(8, None, 9).refined()).eta_total
    assert fine >= coarse * (1 - 1e-12)


def test_oracle_dominates_grid_baselines(tiny):
    grids = Grids(16, None, 9)
    o = brute_force_oracle(tiny, grids)
    for fn in (centralized_solve, greedy_solve, dynamic_solve):
        assert fn(tiny, grids).eta_total <= o * (1 + 1e-9) + 1e-12


def test_oracle_budget(tiny):
    with pytest.raises(ValueError, match="exceeds"):
        brute_force_oracle(tiny, Grids(16, None, 9), limit=10)


def test_no_users_gives_zero(desk_cfg):
    s = generate_scenario(dataclasses.replace(desk_cfg, lue_count=0, hue_count=0), 0)
    sol = random_solve(s, 0)
    assert sol.report.eta_u == 0.0 and sol.report.eta_s >= 0.0
    assert not sol.association.abs_lue.any()


def test_proposed_details(desk):
    sol = solve(AlgorithmTag.Proposed, desk)
    assert set(sol.details["benders"]) == set(Segment)
    assert sol.iterations == max(r.iterations for r in sol.details["benders"].values())
