"""Reference allocators and the brute-force oracle.

All allocators treat the three segments separately: with cross-tier
interference frozen, the total EE is a sum of per-segment ratios that share
no variables, so maximizing each segment maximizes the total.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .energy import EEReport
from .problems import (Allocation, Association, ProblemSpec, Segment, assoc_space,
                       build_problems, check_feasibility, enumerate_space, evaluate_ee,
                       merge, power_model, scatter_powers, segment_links)
from .scenario import Scenario


class AlgorithmTag(enum.Enum):
    Proposed = "proposed"
    Centralized = "centralized"
    Greedy = "greedy"
    Random = "random"
    Dynamic = "dynamic"
    BruteForce = "brute_force"


class InfeasibleSample(RuntimeError):
    pass


@dataclass(frozen=True)
class Grids:
    """Discretization used by the grid-based allocators.

    ``power`` lists absolute levels (W) shared by every link; otherwise each
    link gets ``power_levels + 1`` levels evenly spaced in rate between zero
    and its power ceiling, so doubling the count nests the grid.
    """

    power_levels: int = 16
    power: tuple | None = None
    deploy_points: int = 9

    def refined(self) -> "Grids":
        return Grids(self.power_levels * 2, self.power, self.deploy_points)


@dataclass
class Solution:
    tag: AlgorithmTag
    association: Association
    allocation: Allocation
    report: EEReport
    iterations: int = 0
    converged: bool = True
    details: dict = field(default_factory=dict)

    @property
    def eta_total(self) -> float:
        return self.report.eta_total


def _finish(tag, s, problems, parts, iterations=0, converged=True, details=None) -> Solution:
    a, x = merge(parts, s)
    return Solution(tag, a, x, evaluate_ee(problems, a, x), iterations, converged, details or {})


# ---------------------------------------------------------------- power grids

def power_levels(snr, lo, hi, grids: Grids) -> np.ndarray:
    """Feasible levels per entry, shape ``snr.shape + (G,)``, NaN where unusable."""
    snr, lo, hi = np.broadcast_arrays(np.asarray(snr, float), np.asarray(lo, float),
                                      np.asarray(hi, float))
    if grids.power is not None:
        lv = np.broadcast_to(np.array(sorted(set(grids.power)), float), snr.shape + (len(set(grids.power)),))
    else:
        L = grids.power_levels
        r_hi = np.log2(1 + snr * np.maximum(hi, 0))
        frac = np.arange(L + 1) / L
        lv = (2.0 ** (r_hi[..., None] * frac) - 1) / snr[..., None]
        lv[..., -1] = np.maximum(hi, 0)
    ok = (lv >= lo[..., None] * (1 - 1e-12)) & (lv <= hi[..., None] * (1 + 1e-12)) & (lo <= hi)[..., None]
    return np.where(ok, lv, np.nan)


def _best_level(levels, snr, eta):
    """Level maximizing ``log2(1 + snr p) - eta p``; NaN value if none usable."""
    val = np.log2(1 + snr[..., None] * np.nan_to_num(levels)) - eta * np.nan_to_num(levels)
    val = np.where(np.isnan(levels), -np.inf, val)
    idx = np.argmax(val, axis=-1)
    best = np.take_along_axis(val, idx[..., None], -1)[..., 0]
    p = np.take_along_axis(np.nan_to_num(levels), idx[..., None], -1)[..., 0]
    return best, p


def _dinkelbach_discrete(choose, max_iter=100, tol=1e-12):
    """Exact Dinkelbach over a finite set; ``choose(eta) -> (cand, R, P)``.

    Keeps the best ratio seen, so an empty candidate with ``P = 0`` is harmless.
    """
    eta, best, best_ratio = 0.0, None, -np.inf
    for _ in range(max_iter):
        cand, R, P = choose(eta)
        if cand is None:
            break
        ratio = R / P if P > 0 else 0.0
        if ratio > best_ratio + tol * max(1.0, abs(best_ratio)) or best is None:
            best, best_ratio = cand, ratio
        F = R - eta * P
        if F <= tol * max(1.0, abs(R)):
            break
        eta = ratio
    return best, best_ratio


# ---------------------------------------------------------- deployment grids

def deployment_candidates(s: Scenario, u: int, points: int = 9, cap: int = 5000) -> np.ndarray:
    """Trajectories ``[T, N, 3]`` for ABS ``u`` on a square stencil per free slot.

    The first and last slots stay at the initial spot. The stencil spacing
    lets every pair of stencil points be visited in consecutive slots; if the
    product over free slots exceeds ``cap`` only constant offsets are kept.
    """
    init = np.asarray(s.abs_init[u], float)
    N = s.N
    if points <= 1 or N <= 2:
        return np.repeat(init[None, None], N, axis=1)
    side = int(round(np.sqrt(points)))
    if side * side != points or side % 2 == 0:
        raise ValueError("deploy_points must be an odd square")
    half = side // 2
    reach = s.energy.v_max * s.time.slot_length
    delta = reach / (np.sqrt(2) * half)
    offs = [np.array([i * delta, j * delta, 0.0]) for i in range(-half, half + 1)
            for j in range(-half, half + 1)]
    stencil = [init + o for o in offs
               if 0 <= init[0] + o[0] <= s.region_size and 0 <= init[1] + o[1] <= s.region_size]
    free = N - 2
    if len(stencil) ** free > cap:
        combos = [(p,) * free for p in range(len(stencil))]
    else:
        combos = itertools.product(range(len(stencil)), repeat=free)
    out = []
    for combo in combos:
        traj = np.array([init] + [stencil[i] for i in combo] + [init])
        steps = np.linalg.norm(np.diff(traj, axis=0), axis=1)
        if np.all(steps <= reach * (1 + 1e-12)):
            out.append(traj)
    return np.array(out)


def _pairs_ok(deploy, d_th) -> bool:
    U = deploy.shape[0]
    for i in range(U):
        for j in range(i + 1, U):
            if np.any(np.linalg.norm(deploy[i] - deploy[j], axis=-1) < d_th):
                return False
    return True


# ------------------------------------------------------------- ABS centralized

def _abs_groups(space, X):
    """Unique (ABS -> (served LUEs, backhaul)) signatures with a representative."""
    s = space.scenario
    K, Ml, U, J = s.radio.rb_abs, s.M_l, s.U, 1 + s.C
    nl = U * K * Ml
    out = {}
    for x in X:
        served = x[:nl].reshape(U, K, Ml).any(axis=1)
        bh = x[nl:].reshape(U, J)
        sig = tuple((u, tuple(np.nonzero(served[u])[0]), int(np.argmax(bh[u])))
                    for u in range(U) if served[u].any())
        out.setdefault(sig, x)
    return out


class _AbsTables:
    """Per ABS, backhaul and link count: grid levels for every trajectory,
    LUE and slot."""

    def __init__(self, spec: ProblemSpec, grids: Grids):
        s, ctx = spec.scenario, spec.ctx
        rp = s.radio
        self.s, self.spec = s, spec
        self.trajs = [deployment_candidates(s, u, grids.deploy_points) for u in range(s.U)]
        c = np.stack([ctx.g0 / (ctx.frozen.abs_lue[m] + ctx.sigma_abs) for m in range(s.M_l)])
        target = rp.rate_threshold / (s.N * rp.bandwidth_abs)
        self.snr, self.levels = {}, {}
        for u in range(s.U):
            D = np.sum((self.trajs[u][:, None, :, :] - s.lue.transpose(1, 0, 2)[None]) ** 2, axis=-1)
            snr = c[None] / D                                       # [T, M, N]
            self.snr[u] = snr
            lo = (2.0**target - 1) / snr
            for j in range(1 + s.C):
                for n_links in range(1, rp.rb_abs + 1):
                    share = ctx.capacity[u, j] / n_links / rp.bandwidth_abs
                    hi = np.minimum(rp.p_max, (2.0**share[None, None] - 1) / snr)
                    self.levels[u, j, n_links] = power_levels(snr, lo, hi, grids)

    def group_value(self, u, lues, j, eta):
        """Best trajectory for one ABS group: (value, traj index, powers [L, N])."""
        n_links = len(lues)
        best, p = _best_level(self.levels[u, j, n_links][:, list(lues)], self.snr[u][:, list(lues)], eta)
        per_traj = best.sum(axis=(1, 2))
        t = int(np.argmax(per_traj))
        return per_traj[t], t, p[t]


def _abs_centralized(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    space = assoc_space(spec)
    X = enumerate_space(space)
    groups = _abs_groups(space, X)
    tables = _AbsTables(spec, grids)
    p_fly = spec.ctx.p_fly
    init = np.repeat(np.asarray(s.abs_init)[:, None, :], s.N, axis=1)

    def choose(eta):
        cache = {}
        best_key, best_val = None, -np.inf
        for sig in groups:
            val = 0.0
            for (u, lues, j) in sig:
                if (u, lues, j) not in cache:
                    cache[u, lues, j] = tables.group_value(u, lues, j, eta)
                val += cache[u, lues, j][0] - eta * s.N * p_fly
            if val > best_val:
                best_key, best_val = sig, val
        if best_key is None or not np.isfinite(best_val):
            return None, 0.0, 0.0
        deploy = init.copy()
        chosen = {}
        for (u, lues, j) in best_key:
            _, t, p = cache[u, lues, j]
            deploy[u] = tables.trajs[u][t]
            chosen[u] = (lues, j, t, p)
        if not _pairs_ok(deploy, s.radio.safe_distance):
            deploy, chosen = _resolve_conflicts(tables, best_key, eta, init, s)
            if chosen is None:
                return None, 0.0, 0.0
        R = P = 0.0
        for u, (lues, j, t, p) in chosen.items():
            R += float(np.sum(np.log2(1 + tables.snr[u][t][list(lues)] * p)))
            P += float(np.sum(p)) + s.N * p_fly
        return (best_key, deploy, chosen), R, P

    best, _ = _dinkelbach_discrete(choose)
    if best is None:
        return Association.empty(s), Allocation.initial(s)
    return _abs_build(spec, space, groups[best[0]], best[1], best[2])


def _resolve_conflicts(tables, sig, eta, init, s):
    """Fix ABSs in index order, each taking its best trajectory that keeps
    the safe distance to those already placed."""
    deploy = init.copy()
    chosen = {}
    for (u, lues, j) in sorted(sig):
        best, p = _best_level(tables.levels[u, j, len(lues)][:, list(lues)],
                              tables.snr[u][:, list(lues)], eta)
        order = np.argsort(-best.sum(axis=(1, 2)), kind="stable")
        for t in order:
            if not np.isfinite(best[t].sum()):
                break
            trial = deploy.copy()
            trial[u] = tables.trajs[u][t]
            if _pairs_ok(trial, s.radio.safe_distance):
                deploy = trial
                chosen[u] = (lues, j, int(t), p[t])
                break
        else:
            return None, None
        if u not in chosen:
            return None, None
    return deploy, chosen


def _abs_build(spec, space, x, deploy, chosen):
    s = spec.scenario
    a = space.to_assoc(x)
    alloc = Allocation.initial(s)
    alloc.deploy = np.array(deploy, float)
    links = segment_links(spec, a, alloc.deploy)
    p = np.zeros((links.count, s.N))
    for i, (u, _, _, m) in enumerate(links.keys):
        lues = chosen[u][0]
        p[i] = chosen[u][3][list(lues).index(m)]
    return a, scatter_powers(links, p, alloc)


# --------------------------------------------------- satellite / CBS helpers

def _candidate_links(spec: ProblemSpec):
    """Every possible link of a power-only segment with its SNR and demand floor."""
    s = spec.scenario
    rp = s.radio
    full = Association.empty(s)
    if spec.segment is Segment.SAT:
        full.sat_hue[:] = True
        full.sat_abs[:] = True
    else:
        full.cbs_hue[:] = True
        full.cbs_abs[:] = True
    links = segment_links(spec, full)
    target = rp.rate_threshold / (s.N * spec.bandwidth)
    lo = np.where(links.demand[:, None], (2.0**target - 1) / links.snr, 0.0)
    hi = np.full_like(lo, rp.p_max)
    return links, lo, hi


def _link_key_index(links):
    return {k: i for i, k in enumerate(links.keys)}


def _assoc_link_ids(space, x, index):
    a = space.to_assoc(x)
    if space.segment is Segment.SAT:
        keys = [(0, int(z), "hue", int(m)) for z, m in zip(*np.nonzero(a.sat_hue))]
        keys += [(0, int(z), "abs", int(u)) for z, u in zip(*np.nonzero(a.sat_abs))]
    else:
        keys = [(int(c), int(y), "hue", int(m)) for c, y, m in zip(*np.nonzero(a.cbs_hue))]
        keys += [(int(c), int(y), "abs", int(u)) for c, y, u in zip(*np.nonzero(a.cbs_abs))]
    return [index[k] for k in keys]


def _fixed(spec: ProblemSpec) -> float:
    s = spec.scenario
    if spec.segment is Segment.SAT:
        return s.N * s.radio.p_circuit_sat
    return s.N * s.C * s.radio.p_circuit_cbs


def _power_only_centralized(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    space = assoc_space(spec)
    X = enumerate_space(space)
    links, lo, hi = _candidate_links(spec)
    levels = power_levels(links.snr, lo, hi, grids)
    index = _link_key_index(links)
    ids = [_assoc_link_ids(space, x, index) for x in X]
    fixed = _fixed(spec)

    def choose(eta):
        val, p = _best_level(levels, links.snr, eta)
        per_link = val.sum(axis=1)
        best_i, best_v = None, -np.inf
        for i, li in enumerate(ids):
            v = float(per_link[li].sum()) - eta * fixed
            if v > best_v:
                best_i, best_v = i, v
        if best_i is None or not np.isfinite(best_v):
            return None, 0.0, 0.0
        li = ids[best_i]
        R = float(np.sum(np.log2(1 + links.snr[li] * p[li])))
        return (best_i, p[li]), R, float(np.sum(p[li]) + fixed)

    best, _ = _dinkelbach_discrete(choose)
    if best is None:
        return Association.empty(s), Allocation.initial(s)
    a = space.to_assoc(X[best[0]])
    sub = segment_links(spec, a)
    order = [ids[best[0]].index(index[k]) for k in sub.keys]
    return a, scatter_powers(sub, best[1][order] if order else np.zeros((0, s.N)),
                             Allocation.initial(s))


# ----------------------------------------------------------------- allocators

def centralized_solve(s: Scenario, grids: Grids | None = None, problems=None) -> Solution:
    """Joint discretized solve: exact Dinkelbach over association x power grid
    x deployment grid."""
    grids = grids or Grids(s.config.power_levels, None, s.config.grid_points)
    problems = problems or build_problems(s)
    parts = {Segment.ABS: _abs_centralized(problems[Segment.ABS], grids),
             Segment.SAT: _power_only_centralized(problems[Segment.SAT], grids),
             Segment.CBS: _power_only_centralized(problems[Segment.CBS], grids)}
    return _finish(AlgorithmTag.Centralized, s, problems, parts)


def _per_link_power(snr, lo, hi, fixed_share, grids):
    """1-D grid search for the level maximizing one link's EE per slot."""
    levels = power_levels(snr, lo, hi, grids)
    lv = np.nan_to_num(levels)
    ee = np.log2(1 + snr[..., None] * lv) / (lv + np.asarray(fixed_share, float)[..., None])
    ee = np.where(np.isnan(levels), -np.inf, ee)
    idx = np.argmax(ee, axis=-1)
    return (np.take_along_axis(lv, idx[..., None], -1)[..., 0],
            np.take_along_axis(ee, idx[..., None], -1)[..., 0])


def _abs_powers(spec, a, grids):
    """Per-link EE-optimal grid powers at the initial deployment, or None."""
    s = spec.scenario
    model = power_model(spec, a)
    if not model.feasible:
        return None
    links = model.links
    n_per = np.array([np.sum(links.owner == u) for u in links.owner]) if links.count else np.zeros(0)
    share = (spec.ctx.p_fly / np.maximum(n_per, 1))[:, None] if links.count else np.zeros((0, 1))
    p, ee = _per_link_power(links.snr, model.lo, model.hi, share, grids)
    if links.count and not np.all(np.isfinite(ee)):
        return None
    return scatter_powers(links, p, Allocation.initial(s))


def _power_only_powers(spec, a, grids):
    s = spec.scenario
    model = power_model(spec, a)
    if not model.feasible:
        return None
    links = model.links
    share = _fixed(spec) / s.N / max(links.count, 1)
    p, ee = _per_link_power(links.snr, model.lo, model.hi, share, grids)
    if links.count and not np.all(np.isfinite(ee)):
        return None
    return scatter_powers(links, p, Allocation.initial(s))


def _best_backhaul(spec, u) -> int:
    return int(np.argmax(spec.ctx.capacity[u].mean(axis=1)))


def _abs_greedy(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    init = np.repeat(np.asarray(s.abs_init)[:, None, :], s.N, axis=1)
    full = Association.empty(s)
    full.abs_lue[:] = True
    gains = segment_links(spec, full, init)
    cands = sorted({(-float(gains.snr[i].mean()), int(gains.owner[i]), int(gains.lue[i]))
                    for i in range(gains.count)})
    a = Association.empty(s)
    for k in range(s.radio.rb_abs):
        for _, u, m in cands:
            if a.abs_lue[:, :, m].any():
                continue
            trial = a.copy()
            trial.abs_lue[u, k, m] = True
            if not trial.backhaul[u].any():
                trial.backhaul[u, _best_backhaul(spec, u)] = True
            if power_model(spec, trial).feasible:
                a = trial
                break
    x = _abs_powers(spec, a, grids)
    return a, x


def _power_only_greedy(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    links, lo, hi = _candidate_links(spec)
    feasible = np.all(lo <= hi, axis=1)
    a = Association.empty(s)
    served = set()
    rbs = sorted({(k[0], k[1]) for k in links.keys})
    for tx, rb in rbs:
        options = sorted((-float(links.snr[i].mean()), links.keys[i][2], links.keys[i][3], i)
                         for i, k in enumerate(links.keys)
                         if (k[0], k[1]) == (tx, rb) and feasible[i] and (k[2], k[3]) not in served)
        if not options:
            continue
        _, kind, rx, _ = options[0]
        served.add((kind, rx))
        if spec.segment is Segment.SAT:
            (a.sat_hue if kind == "hue" else a.sat_abs)[rb, rx] = True
        else:
            (a.cbs_hue if kind == "hue" else a.cbs_abs)[tx, rb, rx] = True
    return a, _power_only_powers(spec, a, grids)


def greedy_solve(s: Scenario, grids: Grids | None = None, problems=None) -> Solution:
    """Descending-gain assignment of each RB to the best unserved user."""
    grids = grids or Grids(s.config.power_levels, None, 1)
    problems = problems or build_problems(s)
    parts = {Segment.ABS: _abs_greedy(problems[Segment.ABS], grids),
             Segment.SAT: _power_only_greedy(problems[Segment.SAT], grids),
             Segment.CBS: _power_only_greedy(problems[Segment.CBS], grids)}
    return _finish(AlgorithmTag.Greedy, s, problems, parts)


def random_solve(s: Scenario, seed: int = 0, problems=None, max_tries: int | None = None) -> Solution:
    """Uniform feasible association with uniform powers inside each link's box."""
    problems = problems or build_problems(s)
    max_tries = max_tries or s.config.random_max_tries
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, seed, 5]))
    parts = {}
    for seg in Segment:
        spec = problems[seg]
        space = assoc_space(spec)
        X = enumerate_space(space)
        for _ in range(max_tries):
            a = space.to_assoc(X[rng.integers(len(X))])
            model = power_model(spec, a)
            if not model.feasible:
                continue
            p = rng.uniform(model.lo, model.hi) if model.links.count else np.zeros((0, s.N))
            x = scatter_powers(model.links, p, Allocation.initial(s))
            if not check_feasibility(spec, a, x):
                parts[seg] = (a, x)
                break
        else:
            raise InfeasibleSample(f"{seg.value}: no feasible sample in {max_tries} tries")
    return _finish(AlgorithmTag.Random, s, problems, parts)


def max_weight_matching(scores) -> list[tuple[int, int]]:
    """Maximum-weight assignment of rows to columns; ``-inf`` pairs are never used."""
    S = np.asarray(scores, float)
    if S.size == 0:
        return []
    finite = np.isfinite(S)
    if not finite.any():
        return []
    # zero-valued dummy columns let any row stay unmatched
    floor = -1.0 - np.sum(np.abs(S[finite]))
    r, c = S.shape
    W = np.hstack([np.where(finite, S, floor), np.zeros((r, r))])
    rows, cols = linear_sum_assignment(W, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if j < c and finite[i, j]]


def _abs_dynamic(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    rp = s.radio
    init = np.repeat(np.asarray(s.abs_init)[:, None, :], s.N, axis=1)
    full = Association.empty(s)
    full.abs_lue[:] = True
    links = segment_links(spec, full, init)
    target = rp.rate_threshold / (s.N * rp.bandwidth_abs)
    # stage scores: per-slot single-link EE on the ABS's best backhaul, summed
    best_u = np.full(s.M_l, -1)
    score = np.full(s.M_l, -np.inf)
    for m in range(s.M_l):
        for u in range(s.U):
            i = next(i for i in range(links.count) if links.owner[i] == u and links.lue[i] == m
                     and links.keys[i][1] == 0)
            j = _best_backhaul(spec, u)
            snr = links.snr[i]
            lo = (2.0**target - 1) / snr
            hi = np.minimum(rp.p_max, (2.0**(spec.ctx.capacity[u, j] / rp.bandwidth_abs) - 1) / snr)
            _, ee = _per_link_power(snr, lo, hi, spec.ctx.p_fly, grids)
            total = float(np.sum(ee))
            if total > score[m]:
                score[m], best_u[m] = total, u
    S = np.repeat(score[None], rp.rb_abs, axis=0)
    a = Association.empty(s)
    for k, m in max_weight_matching(S):
        u = int(best_u[m])
        a.abs_lue[u, k, m] = True
        a.backhaul[u, _best_backhaul(spec, u)] = True
    # shed the weakest link of an ABS whose shared capacity cannot carry demand
    while not power_model(spec, a).feasible:
        model = power_model(spec, a)
        bad = np.nonzero(np.any(model.lo > model.hi * (1 + 1e-12), axis=1))[0]
        u = int(model.links.owner[bad[0]])
        served = [(score[m], m) for m in a.served_lues(u)]
        drop = min(served)[1]
        a.abs_lue[u, :, drop] = False
        if not a.abs_lue[u].any():
            a.backhaul[u] = False
    return a, _abs_powers(spec, a, grids)


def _power_only_dynamic(spec: ProblemSpec, grids: Grids):
    s = spec.scenario
    links, lo, hi = _candidate_links(spec)
    share = _fixed(spec) / s.N
    rbs = sorted({(k[0], k[1]) for k in links.keys})
    users = sorted({(k[2], k[3]) for k in links.keys})
    S = np.full((len(rbs), len(users)), -np.inf)
    for i, (tx, rb, kind, rx) in enumerate(links.keys):
        _, ee = _per_link_power(links.snr[i], lo[i], hi[i], share, grids)
        if np.all(np.isfinite(ee)):
            S[rbs.index((tx, rb)), users.index((kind, rx))] = float(np.sum(ee))
    a = Association.empty(s)
    for r, c in max_weight_matching(S):
        (tx, rb), (kind, rx) = rbs[r], users[c]
        if spec.segment is Segment.SAT:
            (a.sat_hue if kind == "hue" else a.sat_abs)[rb, rx] = True
        else:
            (a.cbs_hue if kind == "hue" else a.cbs_abs)[tx, rb, rx] = True
    return a, _power_only_powers(spec, a, grids)


def dynamic_solve(s: Scenario, grids: Grids | None = None, problems=None) -> Solution:
    """Stage-wise matching: per-slot link EE scores summed over the horizon
    (the association is held over slots), assigned by maximum-weight matching."""
    grids = grids or Grids(s.config.power_levels, None, 1)
    problems = problems or build_problems(s)
    parts = {Segment.ABS: _abs_dynamic(problems[Segment.ABS], grids),
             Segment.SAT: _power_only_dynamic(problems[Segment.SAT], grids),
             Segment.CBS: _power_only_dynamic(problems[Segment.CBS], grids)}
    return _finish(AlgorithmTag.Dynamic, s, problems, parts)


# -------------------------------------------------------------------- oracle

def _ratio_max(R_parts, P_parts, P_fixed):
    """Max of ``sum R / (sum P + fixed)`` over the product of per-entry choices.

    Each part is a vector of options; the sums range over the full product.
    Returns (value, index tuple).
    """
    R = np.zeros(1)
    P = np.zeros(1)
    shape = []
    for r, p in zip(R_parts, P_parts):
        R = (R[:, None] + r[None]).ravel()
        P = (P[:, None] + p[None]).ravel()
        shape.append(len(r))
    tot = P + P_fixed
    with np.errstate(divide="ignore", invalid="ignore"):
        ee = np.where(R > 0, R / tot, 0.0)
    ee = np.where(np.isnan(ee), -np.inf, ee)
    i = int(np.argmax(ee))
    return float(ee[i]), np.unravel_index(i, shape) if shape else ()


def brute_force_oracle(s: Scenario, grids: Grids | None = None, limit: int = 10**7,
                       problems=None, return_solution: bool = False):
    """Exhaustive maximum of the total EE over association, power and
    deployment grids (exact on the grid)."""
    grids = grids or Grids(s.config.power_levels, None, s.config.grid_points)
    problems = problems or build_problems(s)
    parts = {}
    budget = [0]

    def charge(n):
        budget[0] += n
        if budget[0] > limit:
            raise ValueError(f"brute force exceeds {limit} combinations")

    for seg in Segment:
        spec = problems[seg]
        space = assoc_space(spec)
        X = enumerate_space(space)
        best = (0.0, Association.empty(s), Allocation.initial(s))
        if seg is Segment.ABS:
            trajs = [deployment_candidates(s, u, grids.deploy_points) for u in range(s.U)]
        for x in X:
            a = space.to_assoc(x)
            if seg is Segment.ABS:
                dep_ids = [int(u) for u in np.nonzero(a.deployed())[0]]
                if any(not a.backhaul[u].any() for u in dep_ids):
                    continue
                combos = itertools.product(*[range(len(trajs[u])) for u in dep_ids])
            else:
                dep_ids, combos = [], [()]
            for combo in combos:
                alloc = Allocation.initial(s)
                for u, t in zip(dep_ids, combo):
                    alloc.deploy[u] = trajs[u][t]
                if seg is Segment.ABS and not _pairs_ok(alloc.deploy, s.radio.safe_distance):
                    continue
                model = power_model(spec, a, alloc.deploy)
                links = model.links
                if links.count == 0:
                    charge(1)
                    continue
                if not model.feasible:
                    charge(1)
                    continue
                lv = power_levels(links.snr, model.lo, model.hi, grids)   # [L, N, G]
                opts = [lv[i, n][~np.isnan(lv[i, n])] for i in range(links.count) for n in range(s.N)]
                if any(len(o) == 0 for o in opts):
                    charge(1)
                    continue
                charge(int(np.prod([len(o) for o in opts], dtype=float)))
                snr = [links.snr[i, n] for i in range(links.count) for n in range(s.N)]
                R_parts = [np.log2(1 + sn * o) for sn, o in zip(snr, opts)]
                val, idx = _ratio_max(R_parts, opts, model.fixed)
                if val > best[0]:
                    p = np.array([o[k] for o, k in zip(opts, idx)]).reshape(links.count, s.N)
                    best = (val, a, scatter_powers(links, p, alloc))
        parts[seg] = (best[1], best[2])
    sol = _finish(AlgorithmTag.BruteForce, s, problems, parts)
    return sol if return_solution else sol.eta_total


# ---------------------------------------------------------------- dispatcher

def proposed_solve(s: Scenario, problems=None) -> Solution:
    """Benders over Dinkelbach over ADMM, one loop per segment."""
    from .benders import run_benders

    cfg = s.config
    problems = problems or build_problems(s)
    results = {seg: run_benders(problems[seg], cfg.epsilon, cfg.max_benders_iter, cfg.chi_down,
                                cfg.chi_up, cfg.rho, cfg.admm_tol, cfg.admm_max_iter, cfg.upsilon,
                                cfg.record_wall_time)
               for seg in Segment}
    parts = {seg: (r.association, r.allocation) for seg, r in results.items()}
    return _finish(AlgorithmTag.Proposed, s, problems, parts,
                   iterations=max(r.iterations for r in results.values()),
                   converged=all(r.converged for r in results.values()),
                   details={"benders": results})


def solve(tag: AlgorithmTag, s: Scenario, seed: int = 0, grids: Grids | None = None) -> Solution:
    problems = build_problems(s)
    if tag is AlgorithmTag.Proposed:
        return proposed_solve(s, problems)
    if tag is AlgorithmTag.Centralized:
        return centralized_solve(s, grids, problems)
    if tag is AlgorithmTag.Greedy:
        return greedy_solve(s, grids, problems)
    if tag is AlgorithmTag.Random:
        return random_solve(s, seed, problems)
    if tag is AlgorithmTag.Dynamic:
        return dynamic_solve(s, grids, problems)
    if tag is AlgorithmTag.BruteForce:
        return brute_force_oracle(s, grids, problems=problems, return_solution=True)
    raise ValueError(f"unknown algorithm {tag!r}")
