"""Benders loop over the binary association of one segment.

The subproblem fixes the association and runs Dinkelbach over ADMM for the
continuous variables. Its achieved EE is the upper bound; the master value
``chi`` is the lower bound. All values are in normalized units (rate over
segment bandwidth, per watt).
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .admm import InfeasibleSubproblem, solve_segment
from .problems import (Allocation, Association, AssocSpace, ProblemSpec, Segment,
                       assoc_space, check_feasibility, enumerate_space, fast_value,
                       flip_variants, power_model, segment_totals)

BIG = 1e6


@dataclass(frozen=True, eq=False)
class BendersCut:
    """``chi <= eta_ub + kappa . (x - anchor)``."""

    eta_ub: float
    kappa: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.kappa)) or not np.isfinite(self.eta_ub):
            raise ValueError("cut coefficients must be finite")

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return self.eta_ub + (x - self.anchor) @ self.kappa


@dataclass
class BendersState:
    iteration: int = 0
    cuts: list = field(default_factory=list)
    eta_ub: float = float("nan")
    eta_lb: float = float("nan")
    chi: float = float("nan")
    incumbent: tuple | None = None        # (Association, Allocation)
    incumbent_eta: float = float("-inf")
    epsilon: float = 1e-3
    chi_down: float = -1e6
    chi_up: float = 1e6
    memo: dict = field(default_factory=dict)     # bits -> eta, None if infeasible


@dataclass
class SubproblemOutcome:
    allocation: Allocation | None
    kappa: np.ndarray
    eta: float               # achieved normalized EE (exact rates)
    feasible: bool
    eta_hat: float = 0.0     # Dinkelbach root of the bounded objective
    dinkelbach_trace: list = field(default_factory=list)
    admm_traces: list = field(default_factory=list)
    rows: list = field(default_factory=list)   # feasibility rows when infeasible


def add_cut(state: BendersState, eta_ub: float, duals, anchor) -> BendersState:
    state.cuts.append(BendersCut(float(eta_ub), np.asarray(duals, float).copy(),
                                 np.asarray(anchor, float).copy()))
    return state


def compute_bounds(state: BendersState, eta_sub: float) -> tuple[float, float]:
    """Upper bound from the subproblem, lower bound from the latest master ``chi``."""
    state.eta_ub = float(eta_sub)
    state.eta_lb = float(state.chi)
    return state.eta_ub, state.eta_lb


# --------------------------------------------------------------- subproblem

def estimate_kappa(spec: ProblemSpec, space: AssocSpace, x, deploy, base_value: float,
                   bits=None) -> np.ndarray:
    """One-sided finite-difference sensitivities of the segment EE to each bit.

    A 1-bit gets ``base - best value after switching it off``; a 0-bit gets
    ``best value after switching it on - base`` plus the sensitivities of the
    anchor bits the switch displaced. Bits whose every variant is infeasible
    get ``-BIG`` (0-bit) or ``+BIG`` (1-bit). Bits outside ``bits`` stay 0.
    """
    x = np.asarray(x, bool)
    n = space.size
    kappa = np.zeros(n)
    bits = range(n) if bits is None else bits
    ones = [b for b in bits if x[b]]
    zeros = [b for b in bits if not x[b]]
    cache: dict[bytes, float | None] = {}

    def value(v):
        key = v.tobytes()
        if key not in cache:
            cache[key] = fast_value(spec, space.to_assoc(v), deploy)
        return cache[key]

    for b in ones:
        vals = [value(v) for v in flip_variants(space, x, b, spec.ctx)]
        vals = [v for v in vals if v is not None]
        kappa[b] = base_value - max(vals) if vals else BIG
    for b in zeros:
        best, best_v = None, None
        for v in flip_variants(space, x, b, spec.ctx):
            val = value(v)
            if val is not None and (best is None or val > best):
                best, best_v = val, v
        if best is None:
            kappa[b] = -BIG
        else:
            removed = x & ~best_v
            kappa[b] = best - base_value + float(np.sum(kappa[removed]))
    return kappa


def feasibility_rows(spec: ProblemSpec, space: AssocSpace, a: Association, expansion=None) -> list:
    """Rows excluding an infeasible association.

    For the ABS segment each culprit link (ABS ``u`` to LUE ``m``) has a
    demand floor above its power box. If the floor exceeds ``p_max`` the
    pair is cut outright; otherwise every association giving ``u`` the same
    backhaul, LUE ``m`` and at least as many links (on any RB) is cut. Other
    segments cut the exact assignment.
    """
    x = space.from_assoc(a)
    if spec.segment is Segment.ABS:
        s = spec.scenario
        K, Ml = s.radio.rb_abs, s.M_l
        model = power_model(spec, a, expansion)
        bad = np.any(model.lo > model.hi * (1 + 1e-12), axis=1)
        idx = {n: i for i, n in enumerate(space.names)}
        rows, seen = [], set()
        for i in np.nonzero(bad)[0]:
            u, m = int(model.links.owner[i]), int(model.links.lue[i])
            if (u, m) in seen:
                continue
            seen.add((u, m))
            coef = np.zeros(space.size)
            if np.any(model.lo[i] > s.radio.p_max):
                for k in range(K):
                    coef[idx[("abs_lue", u, k, m)]] = 1.0
                rows.append((coef, 0.0))
                continue
            # M (y_um + b_uj) + sum of u's other links <= |S| - 2 + 2M
            n_links = len(a.served_lues(u))
            j = int(np.argmax(a.backhaul[u]))
            big = float(Ml)
            for k in range(K):
                for m2 in range(Ml):
                    coef[idx[("abs_lue", u, k, m2)]] = big if m2 == m else 1.0
            coef[idx[("backhaul", u, j)]] = big
            rows.append((coef, n_links - 2 + 2 * big))
        if rows:
            return rows
    return [nogood_row(x)]


def solve_subproblem(spec: ProblemSpec, a: Association, expansion=None, space: AssocSpace | None = None,
                     rho: float = 1.0, tol: float = 1e-4, max_iter: int = 2000,
                     upsilon: float = 1e-4, base: Allocation | None = None) -> SubproblemOutcome:
    """Continuous solve for a fixed association plus cut sensitivities."""
    s = spec.scenario
    space = space or assoc_space(spec)
    x = space.from_assoc(a)
    if not space.feasible(x):
        raise ValueError("association violates the uniqueness rows")

    def infeasible():
        return SubproblemOutcome(None, np.zeros(space.size), float("nan"), False,
                                 rows=feasibility_rows(spec, space, a, expansion))

    if spec.segment is Segment.ABS and any(not a.backhaul[u].any() for u in np.nonzero(a.deployed())[0]):
        return infeasible()
    base = base if base is not None else Allocation.initial(s)
    try:
        res = solve_segment(spec, a, expansion, rho, tol, max_iter, upsilon, base=base)
    except RuntimeError as exc:
        if isinstance(exc, InfeasibleSubproblem) or isinstance(exc.__cause__, InfeasibleSubproblem):
            return infeasible()
        raise
    alloc = res.allocation
    if check_feasibility(spec, a, alloc):
        return infeasible()
    R, P = segment_totals(spec, a, alloc)
    eta = R / P / spec.bandwidth if R > 0 else 0.0
    base_fast = fast_value(spec, a, alloc.deploy)
    kappa = estimate_kappa(spec, space, x, alloc.deploy, eta if base_fast is None else base_fast)
    return SubproblemOutcome(alloc, kappa, eta, True, res.eta_hat,
                             res.dinkelbach.trace if res.dinkelbach else [], res.admm_traces)


# ------------------------------------------------------------------- master

def _cut_matrix(cuts):
    if not cuts:
        return None, None
    K = np.array([c.kappa for c in cuts])
    const = np.array([c.eta_ub - c.kappa @ c.anchor for c in cuts])
    return K, const


def master_values(cuts, X, chi_up: float) -> np.ndarray:
    """``min(chi_up, every cut)`` at each row of ``X``."""
    X = np.asarray(X, float)
    K, const = _cut_matrix(cuts)
    if K is None:
        return np.full(len(X), chi_up)
    return np.minimum(chi_up, np.min(X @ K.T + const, axis=1))


def signature(space: AssocSpace, x) -> bytes:
    """Key under which associations share a value.

    ABS links see no RB-dependent gain, so the RB index is dropped there.
    """
    x = np.asarray(x, bool)
    if space.segment is not Segment.ABS:
        return x.tobytes()
    s = space.scenario
    nl = s.U * s.radio.rb_abs * s.M_l
    served = x[:nl].reshape(s.U, s.radio.rb_abs, s.M_l).any(axis=1)
    return served.tobytes() + x[nl:].tobytes()


def nogood_row(x) -> tuple[np.ndarray, float]:
    """Row excluding exactly ``x``: ``sum_on x_i - sum_off x_i <= |on| - 1``."""
    x = np.asarray(x, bool)
    return np.where(x, 1.0, -1.0), float(x.sum()) - 1.0


def _rows_ok(rows, X):
    if not rows:
        return np.ones(len(X), bool)
    A = np.array([r[0] for r in rows])
    b = np.array([r[1] for r in rows])
    return np.all(np.asarray(X, float) @ A.T <= b + 1e-9, axis=1)


def _enum_master(space, cuts, points, chi_up, memo, rows):
    vals = master_values(cuts, points, chi_up)
    ok = _rows_ok(rows, points)
    best_i, best_v, best_memo = None, -np.inf, False
    for i, xrow in enumerate(points):
        if not ok[i]:
            continue
        key = signature(space, xrow) if memo else None
        if memo and key in memo:
            if memo[key] is None:
                continue
            v, is_memo = memo[key], True
        else:
            v, is_memo = vals[i], False
        if v > best_v or (v == best_v and is_memo and not best_memo):
            best_i, best_v, best_memo = i, v, is_memo
    if best_i is None:
        raise RuntimeError("master has no admissible association")
    return points[best_i].astype(bool), float(best_v)


def _lp_bound(space, K, const, chi_up, lo, hi, rows):
    n = space.size
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A, b = [], []
    if K is not None:
        for k in range(len(K)):
            r = np.zeros(n + 1)
            r[:n] = -K[k]
            r[-1] = 1.0
            A.append(r)
            b.append(const[k])
    for r0, b0 in list(zip(space.A, space.b)) + list(rows):
        r = np.zeros(n + 1)
        r[:n] = r0
        A.append(r)
        b.append(b0)
    bounds = [(float(l), float(h)) for l, h in zip(lo, hi)] + [(None, chi_up)]
    res = linprog(c, A_ub=np.array(A) if A else None, b_ub=np.array(b) if A else None,
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None, None
    return -res.fun, res.x[:n]


def _bb_master(space: AssocSpace, cuts, chi_up, memo, rows, tol=1e-9):
    """Best-first branch and bound with LP-relaxation bounds.

    Integral points whose signature is memoized get a no-good row and their
    node is re-bounded, so the search only returns unexplored points.
    """
    n = space.size
    K, const = _cut_matrix(cuts)
    rows = list(rows)
    best_x, best_v = None, -np.inf
    counter = 0
    lo0, hi0 = np.zeros(n), np.ones(n)
    bound, sol = _lp_bound(space, K, const, chi_up, lo0, hi0, rows)
    if bound is None:
        return None, -np.inf
    heap = [(-bound, counter, lo0, hi0, sol)]
    while heap:
        negb, _, lo, hi, sol = heapq.heappop(heap)
        if -negb <= best_v + tol:
            break
        frac = np.abs(sol - np.round(sol))
        if np.all(frac <= 1e-7):
            x = np.round(sol).astype(bool)
            if memo and signature(space, x) in memo:
                rows.append(nogood_row(x))
                b2, s2 = _lp_bound(space, K, const, chi_up, lo, hi, rows)
                if b2 is not None and b2 > best_v + tol:
                    counter += 1
                    heapq.heappush(heap, (-b2, counter, lo, hi, s2))
                continue
            v = float(master_values(cuts, x[None], chi_up)[0])
            if v > best_v:
                best_x, best_v = x, v
            continue
        j = int(np.argmax(frac))
        for val in (1.0, 0.0):
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[j] = hi2[j] = val
            b2, s2 = _lp_bound(space, K, const, chi_up, lo2, hi2, rows)
            if b2 is not None and b2 > best_v + tol:
                counter += 1
                heapq.heappush(heap, (-b2, counter, lo2, hi2, s2))
    return best_x, best_v


def solve_master(cuts, space: AssocSpace, chi_down: float = -1e6, chi_up: float = 1e6,
                 memo: dict | None = None, rows=(), method: str = "auto", points=None,
                 limit: int = 1 << 16, solved: dict | None = None) -> tuple[np.ndarray, float]:
    """Maximize ``chi`` over feasible associations subject to every cut.

    ``memo`` maps the :func:`signature` of solved associations to their
    achieved value (used in place of the cuts) or None (excluded); ``rows``
    are extra feasibility rows ``(coef, rhs)``. ``solved`` maps signatures to
    a representative bit vector, needed when branch and bound falls back on
    a memoized point. Returns the bit vector and ``chi`` clamped to at least
    ``chi_down``.
    """
    if method not in ("auto", "enum", "bb"):
        raise ValueError(f"unknown method {method!r}")
    if method != "bb":
        if points is None:
            points = enumerate_space(space, limit)
        if points is not None:
            x, v = _enum_master(space, cuts, points, chi_up, memo, rows)
            return x, max(v, chi_down)
        if method == "enum":
            raise RuntimeError("association space too large to enumerate")
    memo = memo or {}
    best_x, best_v = None, -np.inf
    for key in sorted(memo):
        v = memo[key]
        if v is not None and v > best_v and solved and key in solved:
            best_x, best_v = np.asarray(solved[key], bool), v
    bx, bv = _bb_master(space, cuts, chi_up, memo, rows)
    if bx is not None and bv > best_v:
        best_x, best_v = bx, bv
    if best_x is None:
        raise RuntimeError("master has no admissible association")
    return best_x, max(float(best_v), chi_down)


# ----------------------------------------------------------------------- loop

@dataclass
class BendersResult:
    segment: Segment
    association: Association
    allocation: Allocation
    eta: float                 # normalized EE of the incumbent
    ee: float                  # bit/J
    converged: bool
    iterations: int
    trace: list                # (i, eta_ub, eta_lb, gap, wall_ms)
    dinkelbach_trace: list     # (i, j, eta, F)
    admm_trace: list           # (i, t, primal, dual)
    state: BendersState


def _expansion_for(s, a: Association, prev):
    """Previous deployment for deployed ABSs, initial spots elsewhere."""
    init = np.repeat(np.asarray(s.abs_init)[:, None, :], s.N, axis=1)
    if prev is None:
        return init
    e = init.copy()
    dep = a.deployed()
    e[dep] = np.asarray(prev)[dep]
    d_th = s.radio.safe_distance
    for i in range(s.U):
        for j in range(i + 1, s.U):
            if np.any(np.linalg.norm(e[i] - e[j], axis=-1) < d_th):
                return init
    return e


def run_benders(spec: ProblemSpec, epsilon: float = 1e-3, max_iter: int = 100,
                chi_down: float = -1e6, chi_up: float = 1e6, rho: float = 1.0,
                admm_tol: float = 1e-4, admm_max_iter: int = 2000, upsilon: float = 1e-4,
                record_wall_time: bool = False) -> BendersResult:
    s = spec.scenario
    space = assoc_space(spec)
    points = enumerate_space(space)
    state = BendersState(epsilon=epsilon, chi_down=chi_down, chi_up=chi_up)
    solved: dict[bytes, SubproblemOutcome] = {}
    reps: dict[bytes, np.ndarray] = {}
    rows: list = []
    trace, dk_trace, admm_trace = [], [], []
    x = np.zeros(space.size, bool)
    state.chi = chi_down
    prev_deploy = None
    converged = False
    t0 = time.perf_counter()
    for i in range(1, max_iter + 1):
        state.iteration = i
        key = signature(space, x)
        reps.setdefault(key, x.copy())
        a = space.to_assoc(x)
        if key not in solved:
            expansion = _expansion_for(s, a, prev_deploy) if spec.segment is Segment.ABS else None
            out = solve_subproblem(spec, a, expansion, space, rho, admm_tol, admm_max_iter, upsilon)
            solved[key] = out
            for row in out.dinkelbach_trace:
                dk_trace.append((i,) + tuple(row))
            for tr in out.admm_traces:
                admm_trace.extend((i,) + tuple(r) for r in tr)
        out = solved[key]
        if out.feasible:
            ub, lb = compute_bounds(state, out.eta)
            gap = ub - lb
            state.memo[key] = out.eta
            if out.eta > state.incumbent_eta:
                state.incumbent = (a, out.allocation)
                state.incumbent_eta = out.eta
        else:
            state.eta_ub, state.eta_lb = float("nan"), state.chi
            gap = float("nan")
            state.memo[key] = None
            rows.extend(out.rows)
        wall = (time.perf_counter() - t0) * 1e3 if record_wall_time else 0.0
        trace.append((i, state.eta_ub, state.eta_lb, gap, wall))
        if out.feasible and abs(gap) <= epsilon:
            converged = True
            break
        if out.feasible:
            add_cut(state, out.eta, out.kappa, x)
            prev_deploy = out.allocation.deploy
        if i == max_iter:
            break
        x, state.chi = solve_master(state.cuts, space, chi_down, chi_up, state.memo, rows,
                                    points=points, solved=reps)
    if state.incumbent is None:
        raise RuntimeError(f"{spec.segment.value} segment: no feasible association found")
    a, alloc = state.incumbent
    return BendersResult(spec.segment, a, alloc, state.incumbent_eta,
                         state.incumbent_eta * spec.bandwidth, converged, state.iteration,
                         trace, dk_trace, admm_trace, state)
