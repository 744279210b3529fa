import dataclasses
import math

import numpy as np
import pytest

from sasnet.energy import FlightState, flight_energy, flight_power
from sasnet.problems import (CONSTRAINT_IDS, Allocation, Association, Segment, assoc_space,
                             check_feasibility, enumerate_space, evaluate_ee, merge)
from sasnet.scenario import generate_scenario


# ---------------------------------------------------------- reference checker

def _tol(r):
    return 1e-9 * max(1.0, abs(r))


def _le(out, cid, idx, lhs, rhs):
    if lhs > rhs + _tol(rhs):
        out[(cid, idx)] = lhs - rhs


def _in(out, cid, idx, v, lo, hi):
    if v < lo - _tol(lo):
        out[(cid, idx)] = lo - v
    elif v > hi + _tol(hi):
        out[(cid, idx)] = v - hi


def ref_abs(spec, a, x):
    s, ctx = spec.scenario, spec.ctx
    ep, rp = s.energy, s.radio
    U, N, K, L = s.U, s.N, rp.rb_abs, s.time.slot_length
    out = {}
    served = [bool(a.abs_lue[u].any()) for u in range(U)]
    for u in range(U):
        d = math.dist(x.deploy[u, 0], x.deploy[u, N - 1])
        if d > 1e-9:
            out[(31, (u,))] = d
        for n in range(N - 1):
            _le(out, 32, (u, n), math.dist(x.deploy[u, n + 1], x.deploy[u, n]), ep.v_max * L)
        for n in range(N):
            _in(out, 36, (u, n), x.deploy[u, n, 2], ep.h_min, ep.h_max)
            if not served[u]:
                continue
            v = x.speed[u, n]
            _in(out, 35, (u, n), v, ep.v_min, ep.v_max)
            if v > 0:
                E = flight_energy(FlightState(v), ep)
                _le(out, 33, (u, n), ep.energy_threshold, E)
                _le(out, 34, (u, n), flight_power(E, L), x.flight_power[u, n])
    rate = {}
    for u in range(U):
        for k in range(K):
            for m in range(s.M_l):
                if not a.abs_lue[u, k, m]:
                    continue
                r = []
                for n in range(N):
                    D = sum((x.deploy[u, n, i] - s.lue[n, m, i]) ** 2 for i in range(3))
                    snr = ctx.g0 / D / (ctx.frozen.abs_lue[m, n] + ctx.sigma_abs)
                    r.append(rp.bandwidth_abs * math.log2(1 + max(x.p_abs[u, k, n], 0) * snr))
                rate[(u, k, m)] = r
                _le(out, 39, (u, k, m), rp.rate_threshold, sum(r))
    chosen = {}
    for u in range(U):
        js = [j for j in range(1 + s.C) if a.backhaul[u, j]]
        chosen[u] = js[0] if js else None
    for j in range(1 + s.C):
        mem = [u for u in range(U) if chosen[u] == j]
        for n in range(N if mem else 0):
            load = sum(r[n] for (u, _, _), r in rate.items() if u in mem)
            cap = sum(ctx.capacity[u, j, n] for u in mem)
            _le(out, 37 if j == 0 else 38, (j, n), load, cap)
    for u in range(U):
        if chosen[u] is None:
            for n in range(N):
                load = sum(r[n] for (v, _, _), r in rate.items() if v == u)
                if load > 1e-9:
                    out[(37, (u, n))] = load
    for u in range(U):
        for k in range(K):
            if a.abs_lue[u, k].any():
                for n in range(N):
                    _in(out, 40, (u, k, n), x.p_abs[u, k, n], 0.0, rp.p_max)
    for i in range(U):
        for j in range(i + 1, U):
            for n in range(N):
                d = math.dist(x.deploy[i, n], x.deploy[j, n])
                if d < rp.safe_distance - _tol(rp.safe_distance):
                    out[(41, (i, j, n))] = rp.safe_distance - d
    for k in range(K):
        _le(out, 42, ("rb", k), int(a.abs_lue[:, k].sum()), 1)
    for m in range(s.M_l):
        _le(out, 42, ("lue", m), int(a.abs_lue[:, :, m].sum()), 1)
    for u in range(U):
        nb = int(a.backhaul[u].sum())
        _le(out, 43, (u,), nb, 1)
        if served[u] and nb == 0:
            out[(43, (u,))] = 1.0
    return out


def _ref_links(spec, out, items, ids):
    s, rp = spec.scenario, spec.scenario.radio
    demand_id, bh_id, other_id = ids
    for (tx, rb, kind, rx), gain, noise, p in items:
        r = sum(spec.bandwidth * math.log2(1 + max(p[n], 0) * gain[n] / noise[n]) for n in range(s.N))
        if kind == "hue":
            _le(out, demand_id, (tx, rb, rx), rp.rate_threshold, r)
        for n in range(s.N):
            _in(out, bh_id if kind == "abs" else other_id, (tx, rb, n), p[n], 0.0, rp.p_max)


def ref_sat(spec, a, x):
    s, ctx, gt, fr = spec.scenario, spec.ctx, spec.ctx.gains, spec.ctx.frozen
    out = {}
    Z = s.radio.rb_sat
    for z in range(Z):
        _le(out, 44, ("rb", z), int(a.sat_hue[z].sum() + a.sat_abs[z].sum()), 1)
    for m in range(s.M_h):
        _le(out, 44, ("hue", m), int(a.sat_hue[:, m].sum()), 1)
    for u in range(s.U):
        _le(out, 45, (u,), int(a.sat_abs[:, u].sum()), 1)
    if any(k[0] == 44 and k[1][0] == "rb" for k in out):
        return out
    items = []
    for z in range(Z):
        for m in range(s.M_h):
            if a.sat_hue[z, m]:
                items.append(((0, z, "hue", m), gt.sat_hue[z, m], fr.sat_hue[m] + ctx.sigma_sat, x.p_sat[z]))
        for u in range(s.U):
            if a.sat_abs[z, u]:
                items.append(((0, z, "abs", u), gt.sat_abs[z, u], fr.sat_abs[u] + ctx.sigma_sat, x.p_sat[z]))
    _ref_links(spec, out, items, (47, 48, 49))
    return out


def ref_cbs(spec, a, x):
    s, ctx, gt, fr = spec.scenario, spec.ctx, spec.ctx.gains, spec.ctx.frozen
    out = {}
    Y = s.radio.rb_cbs
    for y in range(Y):
        _le(out, 46, ("rb", y), int(a.cbs_hue[:, y].sum() + a.cbs_abs[:, y].sum()), 1)
    for m in range(s.M_h):
        _le(out, 46, ("hue", m), int(a.cbs_hue[:, :, m].sum()), 1)
    for u in range(s.U):
        _le(out, 46, ("abs", u), int(a.cbs_abs[:, :, u].sum()), 1)
    if any(k[0] == 46 and k[1][0] == "rb" for k in out):
        return out
    items = []
    for c in range(s.C):
        for y in range(Y):
            for m in range(s.M_h):
                if a.cbs_hue[c, y, m]:
                    items.append(((c, y, "hue", m), gt.cbs_hue[c, y, m], fr.cbs_hue[m] + ctx.sigma_cbs, x.p_cbs[c, y]))
            for u in range(s.U):
                if a.cbs_abs[c, y, u]:
                    items.append(((c, y, "abs", u), gt.cbs_abs[c, y, u], fr.cbs_abs[u] + ctx.sigma_cbs, x.p_cbs[c, y]))
    _ref_links(spec, out, items, (47, 48, 49))
    return out


REF = {Segment.ABS: ref_abs, Segment.SAT: ref_sat, Segment.CBS: ref_cbs}


def _fuzz(s, rng):
    a = Association.empty(s)
    dens = rng.choice([0.05, 0.15, 0.4])
    for f in ("abs_lue", "backhaul", "sat_hue", "sat_abs", "cbs_hue", "cbs_abs"):
        arr = getattr(a, f)
        arr[...] = rng.random(arr.shape) < dens
    x = Allocation.initial(s)
    pm = s.radio.p_max
    for f in ("p_abs", "p_sat", "p_cbs"):
        arr = getattr(x, f)
        arr[...] = rng.uniform(-0.05 * pm, 1.2 * pm, arr.shape) * (rng.random(arr.shape) < 0.8)
    ep = s.energy
    if rng.random() < 0.7:
        x.deploy[:, 1:-1] += rng.normal(0, 80, x.deploy[:, 1:-1].shape)
        x.deploy[:, :, 2] = np.clip(x.deploy[:, :, 2], ep.h_min - 5, ep.h_max + 5)
    if rng.random() < 0.2:
        x.deploy[:, -1] += rng.normal(0, 1, (s.U, 3))
    x.speed *= rng.uniform(0.5, 1.5, x.speed.shape)
    x.flight_power *= rng.uniform(0.97, 1.03, x.flight_power.shape)
    return a, x


def test_fuzzed_violation_sets_match_reference(desk, desk_problems):
    rng = np.random.default_rng(31)
    seen = set()
    for _ in range(1000):
        a, x = _fuzz(desk, rng)
        for seg, spec in desk_problems.items():
            got = {(v.constraint_id, v.indices): v.slack for v in check_feasibility(spec, a, x)}
            want = REF[seg](spec, a, x)
            assert got.keys() == want.keys()
            for k in got:
                assert got[k] == pytest.approx(want[k], rel=1e-9, abs=1e-9)
            seen |= {k[0] for k in got}
    # the fuzzer reaches most constraint rows
    assert len(seen) >= 15


# ------------------------------------------------------------------- examples

def _feasible_start(s):
    return Association.empty(s), Allocation.initial(s)


def test_empty_candidate_is_feasible(desk, desk_problems):
    a, x = _feasible_start(desk)
    for spec in desk_problems.values():
        assert check_feasibility(spec, a, x) == []
    r = evaluate_ee(desk_problems, a, x)
    assert r.eta_u == 0.0
    assert r.eta_s == r.eta_c == 0.0


def test_altitude_one_metre_over_cap(desk, desk_problems):
    a, x = _feasible_start(desk)
    x.deploy[0, :, 2] = desk.energy.h_max + 1
    out = check_feasibility(desk_problems[Segment.ABS], a, x)
    alt = [v for v in out if v.constraint_id == 36]
    assert len(alt) == desk.N
    assert all(v.slack == pytest.approx(1.0) for v in alt)
    assert {v.constraint_id for v in out} == {36}


def test_altitude_single_slot(desk, desk_problems):
    a, x = _feasible_start(desk)
    x.deploy[0, 1, 2] = desk.energy.h_max + 1
    out = [v for v in check_feasibility(desk_problems[Segment.ABS], a, x) if v.constraint_id == 36]
    assert len(out) == 1 and out[0].indices == (0, 1) and out[0].slack == pytest.approx(1.0)


def test_two_abs_one_metre_apart(desk, desk_problems):
    a, x = _feasible_start(desk)
    x.deploy[1] = x.deploy[0] + np.array([1.0, 0, 0])
    ids = {v.constraint_id for v in check_feasibility(desk_problems[Segment.ABS], a, x)}
    assert 41 in ids


def test_zero_power_only_demand_rows(desk, desk_problems):
    a = Association.empty(desk)
    a.abs_lue[0, 0, 0] = True
    a.backhaul[0, 0] = True
    a.sat_hue[0, 0] = True
    a.cbs_hue[0, 0, 1] = True
    x = Allocation.initial(desk)
    ids = set()
    for spec in desk_problems.values():
        ids |= {v.constraint_id for v in check_feasibility(spec, a, x)}
    assert ids == {39, 47}


def test_bad_shape_raises(desk, desk_problems):
    a, x = _feasible_start(desk)
    x.p_abs = x.p_abs[:, :, :-1]
    with pytest.raises(ValueError, match="p_abs"):
        check_feasibility(desk_problems[Segment.ABS], a, x)


def test_constraint_id_coverage():
    ids = sorted(i for v in CONSTRAINT_IDS.values() for i in v)
    assert set(ids) == set(range(31, 50))


def test_raising_pmax_never_adds_violations(desk_cfg):
    rng = np.random.default_rng(4)
    s_lo = generate_scenario(desk_cfg, 2)
    s_hi = generate_scenario(dataclasses.replace(desk_cfg, p_max_dbm=desk_cfg.p_max_dbm + 3), 2)
    from sasnet.problems import build_problems
    P_lo, P_hi = build_problems(s_lo), build_problems(s_hi)
    for _ in range(100):
        a, x = _fuzz(s_lo, rng)
        for seg in Segment:
            lo = {(v.constraint_id, v.indices) for v in check_feasibility(P_lo[seg], a, x)}
            hi = {(v.constraint_id, v.indices) for v in check_feasibility(P_hi[seg], a, x)}
            # frozen interference grows with p_max, so demand rows may flip
            assert {k for k in hi - lo if k[0] not in (37, 38, 39, 47)} == set()


def test_space_rows_match_checker(desk, desk_problems):
    for seg, spec in desk_problems.items():
        space = assoc_space(spec)
        rng = np.random.default_rng(7)
        for _ in range(200):
            bits = rng.random(space.size) < 0.2
            a = space.to_assoc(bits)
            assert np.array_equal(space.from_assoc(a), bits)
            x = Allocation.initial(desk)
            if seg is Segment.ABS:
                # association rows only
                rows = {v.constraint_id for v in check_feasibility(spec, a, x)} & {42, 43}
            elif seg is Segment.SAT:
                rows = {v.constraint_id for v in check_feasibility(spec, a, x)} & {44, 45}
            else:
                rows = {v.constraint_id for v in check_feasibility(spec, a, x)
                        if v.constraint_id == 46}
            if seg is Segment.ABS:
                # the space also drops backhaul bits on idle ABSs (canonical form)
                idle_bh = any(a.backhaul[u].any() and not a.abs_lue[u].any()
                              for u in range(desk.U))
                assert space.feasible(bits) == (not rows and not idle_bh)
            else:
                assert space.feasible(bits) == (not rows)


def test_enumerate_space_tiny(tiny_cfg):
    from sasnet.problems import build_problems
    s = generate_scenario(tiny_cfg, 0)
    for spec in build_problems(s).values():
        pts = enumerate_space(assoc_space(spec))
        assert pts is not None and len(pts) >= 1
        assert all(assoc_space(spec).feasible(p) for p in pts)
        assert len({tuple(p) for p in pts}) == len(pts)


def test_merge_keeps_segment_fields(desk):
    a1 = Association.empty(desk)
    a1.abs_lue[0, 0, 0] = True
    a2 = Association.empty(desk)
    a2.sat_hue[0, 0] = True
    x1, x2 = Allocation.initial(desk), Allocation.initial(desk)
    x1.p_abs[0, 0] = 0.3
    x2.p_sat[0] = 0.7
    a, x = merge({Segment.ABS: (a1, x1), Segment.SAT: (a2, x2)}, desk)
    assert a.abs_lue[0, 0, 0] and a.sat_hue[0, 0]
    assert x.p_abs[0, 0, 0] == 0.3 and x.p_sat[0, 0] == 0.7
