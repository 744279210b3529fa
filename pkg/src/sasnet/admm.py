"""Consensus ADMM for the subtractive-form segment subproblems.

Each node (ABS, satellite or CBS) keeps local copies of its powers and, for
ABSs, its horizontal trajectory. A controller holds the global copies and
projects them onto the shared constraints (power box and linearized safe
distance). The iteration is written for a maximization: locals maximize
``F - duals . (x - z) - rho/2 |x - z|^2``, globals are the projection of
``x + duals / rho`` and duals move by ``rho (x - z)``.

Message passing is simulated in process: every local result is wrapped in a
message tagged with its iteration, and the controller refuses stale tags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .approx import LOG2E, rate_lb_grad_D, rate_lb_grad_p, rate_lb_normalized
from .dinkelbach import run_dinkelbach
from .problems import (Allocation, Association, ProblemSpec, Segment, fixed_power,
                       power_model, rate_share, scatter_powers, segment_links)

KM = 1e3


# ------------------------------------------------------------------ core maths

def augmented_lagrangian(F, locals_, globals_, duals, rho):
    """``F + duals . (x - z) + rho/2 |x - z|^2`` over flattened copies."""
    x = np.asarray(locals_, float)
    z = np.asarray(globals_, float)
    phi = np.asarray(duals, float)
    if x.shape != z.shape or x.shape != phi.shape:
        raise ValueError("locals, globals and duals must share a shape")
    gap = x - z
    return float(F + np.sum(phi * gap) + 0.5 * rho * np.sum(gap * gap))


def global_update(locals_, duals, rho, project: Callable | None = None) -> np.ndarray:
    """Projection of ``x + duals / rho`` onto the shared constraint set."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    v = np.asarray(locals_, float) + np.asarray(duals, float) / rho
    return project(v) if project is not None else v


def dual_update(duals, globals_, locals_, rho) -> np.ndarray:
    """Dual ascent on the consensus gap ``locals - globals``."""
    return np.asarray(duals, float) + rho * (np.asarray(locals_, float) - np.asarray(globals_, float))


@dataclass
class AdmmState:
    globals_: np.ndarray
    duals: np.ndarray
    rho: float
    t: int = 0
    primal_res: float = float("inf")
    dual_res: float = float("inf")

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class Message:
    t: int
    node: int
    value: np.ndarray


class BarrierError(RuntimeError):
    pass


@dataclass
class AdmmResult:
    locals_: np.ndarray
    globals_: np.ndarray
    duals: np.ndarray
    rho: float
    iterations: int
    converged: bool
    primal_res: float
    dual_res: float
    trace: list = field(default_factory=list)  # (t, primal_res, dual_res)


LocalStep = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def _collect(messages: Sequence[Message], t: int, slices: Sequence[slice], size: int) -> np.ndarray:
    x = np.empty(size)
    seen = set()
    for msg in messages:
        if msg.t != t:
            raise BarrierError(f"message from node {msg.node} tagged {msg.t}, expected {t}")
        x[slices[msg.node]] = msg.value
        seen.add(msg.node)
    if len(seen) != len(slices):
        missing = sorted(set(range(len(slices))) - seen)
        raise BarrierError(f"no update from nodes {missing} at iteration {t}")
    return x


def run_consensus(local_steps: Sequence[LocalStep], slices: Sequence[slice], x0,
                  project: Callable | None = None, z0=None, duals0=None, rho: float = 1.0,
                  tol: float = 1e-4, max_iter: int = 2000, adapt: bool = True,
                  rho_bounds=(1e-6, 1e6)) -> AdmmResult:
    """Generic consensus ADMM.

    ``local_steps[i](z_i, phi_i, rho)`` returns node ``i``'s new local copy.
    Stops when primal ``|x - z|`` and dual ``rho |z - z_prev|`` residuals are
    both at most ``tol``.
    """
    x = np.asarray(x0, float).copy()
    size = x.size
    z = (global_update(x, np.zeros(size), 1.0, project) if z0 is None
         else np.asarray(z0, float).copy())
    state = AdmmState(z, np.zeros(size) if duals0 is None else np.asarray(duals0, float).copy(), rho)
    trace = []
    converged = False
    for t in range(1, max_iter + 1):
        state.t = t
        msgs = [Message(t, i, np.asarray(step(state.globals_[sl], state.duals[sl], state.rho), float))
                for i, (step, sl) in enumerate(zip(local_steps, slices))]
        x = _collect(msgs, t, slices, size)
        z_new = global_update(x, state.duals, state.rho, project)
        state.duals = dual_update(state.duals, z_new, x, state.rho)
        state.primal_res = float(np.linalg.norm(x - z_new))
        state.dual_res = float(state.rho * np.linalg.norm(z_new - state.globals_))
        state.globals_ = z_new
        trace.append((t, state.primal_res, state.dual_res))
        if state.primal_res <= tol and state.dual_res <= tol:
            converged = True
            break
        if adapt:
            if state.primal_res > 10 * state.dual_res and state.rho * 2 <= rho_bounds[1]:
                state.rho *= 2
            elif state.dual_res > 10 * state.primal_res and state.rho / 2 >= rho_bounds[0]:
                state.rho /= 2
    return AdmmResult(x, state.globals_, state.duals, state.rho, state.t, converged,
                      state.primal_res, state.dual_res, trace)


# ------------------------------------------------------------ toy instance

def quadratic_toy(a: float, c: float, lo: float = -np.inf, hi: float = np.inf, rho: float = 1.0,
                  tol: float = 1e-6, max_iter: int = 2000, adapt: bool = False) -> AdmmResult:
    """Single node maximizing ``-a/2 (p - c)^2`` with the box held by the controller.

    The optimum is ``clip(c, lo, hi)``.
    """
    def step(z, phi, r):
        return (a * c - phi + r * z) / (a + r)

    return run_consensus([step], [slice(0, 1)], np.zeros(1),
                         project=lambda v: np.clip(v, lo, hi), rho=rho, tol=tol,
                         max_iter=max_iter, adapt=adapt)


# ------------------------------------------------------------- power nodes

def power_local_step(snr, lo, hi, eta, z, phi, rho):
    """Exact maximizer of ``sum log2(1 + snr p) - eta p - phi (p - z) - rho/2 (p - z)^2``.

    Stationarity is a quadratic in ``p`` whose larger root is the unconstrained
    maximizer; the box then clips it (the objective is concave).
    """
    s = np.asarray(snr, float)
    b = eta + np.asarray(phi, float) - rho * np.asarray(z, float)
    A = rho * s
    B = rho + b * s
    C = b - s * LOG2E
    disc = np.maximum(B * B - 4 * A * C, 0.0)
    root = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(B >= 0, -2 * C / (B + root), (-B + root) / (2 * A))
    q = np.where(s > 0, q, -b / rho)
    return np.clip(q, lo, hi)


# --------------------------------------------------------------- ABS nodes

def _sq(a, b):
    d = a - b
    return np.sum(d * d, axis=-1)


@dataclass
class AbsNodeData:
    """Constants of one ABS node, positions in km."""

    c: np.ndarray        # [L, N] SNR per watt times squared distance (km^2)
    lue: np.ndarray      # [L, N, 3]
    share: np.ndarray    # [L, N] rate ceiling in bits/s/Hz
    target: float        # per-slot demand in bits/s/Hz
    D_loc: np.ndarray    # [L, N] squared distance at the expansion point
    pins: np.ndarray     # [3] start and end position
    region: float
    h_box: tuple
    step: float          # max displacement per slot
    p_max: float


def abs_power_box(node: AbsNodeData, pos):
    """Exact-rate demand floor and capacity ceiling on each link power."""
    D = _sq(pos[None, :, :], node.lue)
    lo = (2.0**node.target - 1) * D / node.c
    hi = np.minimum(node.p_max, (2.0**node.share - 1) * D / node.c)
    return lo, hi, D


def abs_local_objective(node: AbsNodeData, eta, p, pos, z, phi, rho) -> float:
    """Local augmented objective of an ABS node (to be maximized)."""
    D = _sq(pos[None, :, :], node.lue)
    F = float(np.sum(rate_lb_normalized(p, D, node.D_loc, node.c)) - eta * np.sum(p))
    x = np.concatenate([p.ravel(), pos[:, 0], pos[:, 1]])
    gap = x - z
    return F - float(np.sum(phi * gap)) - 0.5 * rho * float(np.sum(gap * gap))


def abs_local_gradient(node: AbsNodeData, eta, p, pos, z, phi, rho):
    """Gradient of :func:`abs_local_objective` in ``p`` [L, N] and ``pos`` [N, 3]."""
    L, N = p.shape
    D = _sq(pos[None, :, :], node.lue)
    x = np.concatenate([p.ravel(), pos[:, 0], pos[:, 1]])
    pen = -phi - rho * (x - z)
    gp = rate_lb_grad_p(p, D, node.D_loc, node.c) - eta + pen[:L * N].reshape(L, N)
    gD = rate_lb_grad_D(p, node.D_loc, node.c)                       # [L, N]
    gpos = np.sum(2 * gD[:, :, None] * (pos[None, :, :] - node.lue), axis=0)
    gpos[:, 0] += pen[L * N:L * N + N]
    gpos[:, 1] += pen[L * N + N:]
    return gp, gpos


def _edge_project(a, b, r, free_a, free_b):
    d = b - a
    n = np.linalg.norm(d)
    if n <= r:
        return a, b
    excess = (n - r) * d / n
    if free_a and free_b:
        return a + excess / 2, b - excess / 2
    if free_a:
        return a + excess, b
    if free_b:
        return a, b - excess
    return a, b


def project_trajectory(node: AbsNodeData, pos, iters: int = 200, tol: float = 1e-12):
    """Dykstra projection onto pins, per-slot displacement, altitude and region boxes."""
    N = pos.shape[0]
    free = np.ones(N, bool)
    free[0] = free[-1] = False
    lo = np.array([0.0, 0.0, node.h_box[0]])
    hi = np.array([node.region, node.region, node.h_box[1]])

    def box(y):
        y = np.clip(y, lo, hi)
        y[~free] = node.pins
        return y

    def chain(y, parity):
        y = y.copy()
        for n in range(parity, N - 1, 2):
            y[n], y[n + 1] = _edge_project(y[n], y[n + 1], node.step, free[n], free[n + 1])
        return y

    sets = [box, lambda y: chain(y, 0), lambda y: chain(y, 1)]
    y = pos.copy()
    incr = [np.zeros_like(y) for _ in sets]
    for _ in range(iters):
        prev = y
        for k, proj in enumerate(sets):
            w = proj(y + incr[k])
            incr[k] = y + incr[k] - w
            y = w
        if np.max(np.abs(y - prev)) <= tol:
            break
    return y


def trajectory_ok(node: AbsNodeData, pos) -> bool:
    if np.any(pos[[0, -1]] != node.pins):
        return False
    if np.any(pos[:, :2] < 0) or np.any(pos[:, :2] > node.region):
        return False
    if np.any(pos[:, 2] < node.h_box[0]) or np.any(pos[:, 2] > node.h_box[1]):
        return False
    steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    return bool(np.all(steps <= node.step * (1 + 1e-12)))


def _p_step(node, eta, pos, z, phi, rho, lo, hi, D, iters=60):
    """Exact 1-D maximization of each power entry by bisection on the derivative."""
    L, N = lo.shape
    zp = z[:L * N].reshape(L, N)
    fp = phi[:L * N].reshape(L, N)

    def deriv(p):
        return rate_lb_grad_p(p, D, node.D_loc, node.c) - eta - fp - rho * (p - zp)

    a, b = lo.copy(), hi.copy()
    da, db = deriv(a), deriv(b)
    out = np.where(da <= 0, a, np.where(db >= 0, b, np.nan))
    todo = np.isnan(out)
    if np.any(todo):
        for _ in range(iters):
            m = 0.5 * (a + b)
            dm = deriv(m)
            pos_side = dm > 0
            a = np.where(todo & pos_side, m, a)
            b = np.where(todo & ~pos_side, m, b)
        out = np.where(todo, 0.5 * (a + b), out)
    return out


class AbsNode:
    """Local solver state for one ABS."""

    def __init__(self, data: AbsNodeData, eta: float, pos0, p0=None, pos_steps: int = 2):
        self.data = data
        self.eta = eta
        self.pos = np.array(pos0, float)
        lo, hi, _ = abs_power_box(data, self.pos)
        self.p = np.clip(hi if p0 is None else p0, lo, hi)
        self.t_pos = 1.0
        self.pos_steps = pos_steps

    def _value(self, p, pos, z, phi, rho):
        return abs_local_objective(self.data, self.eta, p, pos, z, phi, rho)

    def __call__(self, z, phi, rho):
        d = self.data
        lo, hi, D = abs_power_box(d, self.pos)
        self.p = _p_step(d, self.eta, self.pos, z, phi, rho, lo, hi, D)
        for _ in range(self.pos_steps):
            f0 = self._value(self.p, self.pos, z, phi, rho)
            _, g = abs_local_gradient(d, self.eta, self.p, self.pos, z, phi, rho)
            g[0] = g[-1] = 0.0
            if not np.any(g):
                break
            t = self.t_pos
            moved = False
            for _ in range(30):
                cand = project_trajectory(d, self.pos + t * g)
                if trajectory_ok(d, cand):
                    clo, chi, _ = abs_power_box(d, cand)
                    if np.all(clo <= chi):
                        pc = np.clip(self.p, clo, chi)
                        f1 = self._value(pc, cand, z, phi, rho)
                        step = cand - self.pos
                        if f1 >= f0 + 1e-4 * float(np.sum(g * step)) and np.any(step):
                            self.pos, self.p = cand, pc
                            moved = True
                            break
                t *= 0.5
            self.t_pos = min(t * 2, 1e3) if moved else max(t, 1e-9)
            if not moved:
                break
        L, N = self.p.shape
        return np.concatenate([self.p.ravel(), self.pos[:, 0], self.pos[:, 1]])


def project_globals(v, layout, p_max, region, anchor_xy, d_th, iters=500, tol=1e-12):
    """Power clamp plus projection of positions onto the region and the
    linearized safe-distance half-spaces around ``anchor_xy`` [U, N, 2]."""
    out = np.array(v, float)
    for u, (ps, xs, ys) in layout.items():
        out[ps] = np.clip(out[ps], 0.0, p_max)
    us = sorted(layout)
    if not us:
        return out
    N = anchor_xy.shape[1]
    for n in range(N):
        pts = np.array([[out[layout[u][1]][n], out[layout[u][2]][n]] for u in us])
        pts = _project_slot(pts, anchor_xy[us, n], d_th, region, iters, tol)
        for i, u in enumerate(us):
            out[layout[u][1].start + n] = pts[i, 0]
            out[layout[u][2].start + n] = pts[i, 1]
    return out


def _project_slot(pts, anchor, d_th, region, iters, tol):
    """Dykstra projection of [U, 2] points onto box and pairwise half-spaces."""
    U = pts.shape[0]
    halfspaces = []
    for i in range(U):
        for j in range(i + 1, U):
            d0 = anchor[i] - anchor[j]
            # 2 d0 . (x_i - x_j) >= d_th^2 + |d0|^2
            a = np.zeros((U, 2))
            a[i], a[j] = 2 * d0, -2 * d0
            halfspaces.append((a, d_th**2 + float(d0 @ d0)))

    def box(y):
        return np.clip(y, 0.0, region)

    projs = [box]
    for a, rhs in halfspaces:
        nn = float(np.sum(a * a))
        if nn == 0:
            continue

        def hs(y, a=a, rhs=rhs, nn=nn):
            val = float(np.sum(a * y))
            return y if val >= rhs else y + (rhs - val) / nn * a
        projs.append(hs)
    if len(projs) == 1:
        return box(pts)
    y = pts.copy()
    incr = [np.zeros_like(y) for _ in projs]
    for _ in range(iters):
        prev = y
        for k, proj in enumerate(projs):
            w = proj(y + incr[k])
            incr[k] = y + incr[k] - w
            y = w
        if np.max(np.abs(y - prev)) <= tol:
            break
    return y


# --------------------------------------------------------- segment solver

@dataclass
class SegmentSolution:
    allocation: Allocation
    R: float          # normalized rate used in the subtractive objective
    P: float          # watts
    admm: AdmmResult
    warm: dict


def _links_layout(spec, links, nodes):
    """Flat slices for each node's powers (and positions for ABS nodes)."""
    N = spec.scenario.N
    layout, slices, start = {}, [], 0
    for node_id, rows in nodes:
        L = len(rows)
        ps = slice(start, start + L * N)
        start += L * N
        if spec.segment is Segment.ABS:
            xs = slice(start, start + N)
            ys = slice(start + N, start + 2 * N)
            start += 2 * N
            layout[node_id] = (ps, xs, ys)
        slices.append(slice(ps.start, start))
    return layout, slices, start


def _node_groups(spec: ProblemSpec, a: Association, links):
    if spec.segment is Segment.ABS:
        return [(int(u), [i for i in range(links.count) if links.owner[i] == u])
                for u in np.nonzero(a.deployed())[0]]
    if spec.segment is Segment.SAT:
        return [(0, list(range(links.count)))] if links.count else []
    groups = {}
    for i, key in enumerate(links.keys):
        groups.setdefault(key[0], []).append(i)
    return sorted(groups.items())


class InfeasibleSubproblem(RuntimeError):
    pass


def abs_node_data(spec: ProblemSpec, a: Association, u: int, rows, links, expansion):
    s = spec.scenario
    ctx = spec.ctx
    rp, ep = s.radio, s.energy
    N = s.N
    lue_idx = links.lue[rows]
    lue_km = np.stack([s.lue[:, m] for m in lue_idx]) / KM            # [L, N, 3]
    c = np.stack([ctx.g0 / (ctx.frozen.abs_lue[m] + ctx.sigma_abs) for m in lue_idx]) / KM**2
    share = rate_share(spec, a, links)[rows]
    exp_km = np.asarray(expansion, float)[u] / KM
    D_loc = _sq(exp_km[None], lue_km)
    return AbsNodeData(c=c, lue=lue_km, share=share,
                       target=rp.rate_threshold / (N * rp.bandwidth_abs), D_loc=D_loc,
                       pins=np.asarray(s.abs_init[u], float) / KM, region=s.region_size / KM,
                       h_box=(ep.h_min / KM, ep.h_max / KM),
                       step=ep.v_max * s.time.slot_length / KM, p_max=rp.p_max)


def _repair_safe_distance(deploy, expansion, d_th):
    """Blend toward the expansion deployment until pairwise distances hold."""
    U = deploy.shape[0]

    def ok(dep):
        for i in range(U):
            for j in range(i + 1, U):
                if np.any(np.linalg.norm(dep[i] - dep[j], axis=-1) < d_th):
                    return False
        return True

    if ok(deploy):
        return deploy
    for k in range(1, 40):
        tau = 0.5**k
        cand = expansion + tau * (deploy - expansion)
        if ok(cand):
            return cand
    return expansion.copy()


def run_admm(spec: ProblemSpec, a: Association, eta: float, rho: float = 1.0,
             tol: float = 1e-4, max_iter: int = 2000, expansion=None, warm: dict | None = None,
             base: Allocation | None = None) -> SegmentSolution:
    """ADMM maximizer of the subtractive objective for a fixed association.

    ``eta`` is in normalized units (bits/s/Hz per watt). Returns the local
    iterate after a safe-distance repair, which satisfies every local box
    exactly.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    s = spec.scenario
    rp = s.radio
    base = base if base is not None else Allocation.initial(s)
    warm = dict(warm or {})
    is_abs = spec.segment is Segment.ABS
    if expansion is None:
        expansion = base.deploy
    expansion = np.asarray(expansion, float)
    start_dep = np.asarray(warm.get("deploy", expansion), float)
    links = segment_links(spec, a, expansion)
    groups = _node_groups(spec, a, links)
    layout, slices, size = _links_layout(spec, links, groups)
    N = s.N

    steps, x0 = [], np.zeros(size)
    nodes = {}
    if is_abs:
        for (u, rows), sl in zip(groups, slices):
            data = abs_node_data(spec, a, u, rows, links, expansion)
            pos0 = start_dep[u] / KM
            lo, hi, _ = abs_power_box(data, pos0)
            if np.any(lo > hi):
                raise InfeasibleSubproblem(f"ABS {u} cannot meet demand within capacity")
            p0 = warm.get("p", {}).get(u)
            node = AbsNode(data, eta, pos0, p0)
            nodes[u] = node
            steps.append(node)
            x0[sl] = np.concatenate([node.p.ravel(), node.pos[:, 0], node.pos[:, 1]])
    else:
        model = power_model(spec, a)
        if not model.feasible:
            raise InfeasibleSubproblem("demand exceeds the power box")
        for (nid, rows), sl in zip(groups, slices):
            snr, lo, hi = model.links.snr[rows], model.lo[rows], model.hi[rows]

            def step(z, phi, r, snr=snr, lo=lo, hi=hi):
                return power_local_step(snr, lo, hi, eta, z.reshape(snr.shape),
                                        phi.reshape(snr.shape), r).ravel()
            steps.append(step)
            x0[sl] = np.clip(warm.get("p", {}).get(nid, hi), lo, hi).ravel()

    anchor = expansion[:, :, :2] / KM
    d_th = rp.safe_distance / KM
    region = s.region_size / KM

    def project(v):
        if is_abs:
            return project_globals(v, layout, rp.p_max, region, anchor, d_th)
        return np.clip(v, 0.0, rp.p_max)

    same = warm.get("size") == size
    res = run_consensus(steps, slices, x0, project,
                        z0=warm.get("z") if same else None,
                        duals0=warm.get("duals") if same else None,
                        rho=warm.get("rho", rho) if same else rho, tol=tol, max_iter=max_iter)

    x = res.locals_
    p_links = np.zeros((links.count, N))
    deploy = start_dep.copy() if is_abs else base.deploy.copy()
    for (nid, rows), sl in zip(groups, slices):
        L = len(rows)
        p_links[rows] = x[sl][:L * N].reshape(L, N)
        if is_abs:
            deploy[nid] = nodes[nid].pos * KM
    if is_abs:
        deploy = _repair_safe_distance(deploy, expansion, rp.safe_distance)
        # final powers on the exact box of the repaired deployment
        final_links = segment_links(spec, a, deploy)
        share = rate_share(spec, a, final_links)
        target = rp.rate_threshold / (N * rp.bandwidth_abs)
        lo = (2.0**target - 1) / final_links.snr
        hi = np.minimum(rp.p_max, (2.0**share - 1) / final_links.snr)
        if np.any(lo > hi):
            deploy = expansion.copy()
            final_links = segment_links(spec, a, deploy)
            lo = (2.0**target - 1) / final_links.snr
            hi = np.minimum(rp.p_max, (2.0**share - 1) / final_links.snr)
        p_links = np.clip(p_links, lo, hi)
        D = np.stack([np.sum((deploy[k[0]] - s.lue[:, k[3]]) ** 2, axis=-1) for k in links.keys]) \
            if links.count else np.zeros((0, N))
        D_loc = np.stack([np.sum((expansion[k[0]] - s.lue[:, k[3]]) ** 2, axis=-1)
                          for k in links.keys]) if links.count else np.zeros((0, N))
        c = final_links.snr * D
        R = float(np.sum(rate_lb_normalized(p_links, D, D_loc, c)))
    else:
        R = float(np.sum(np.log2(1 + p_links * links.snr)))
    alloc = base.copy()
    if is_abs:
        alloc.deploy = deploy
    alloc = scatter_powers(links, p_links, alloc)
    P = float(np.sum(p_links) + fixed_power(spec, a))
    new_warm = {"size": size, "z": res.globals_, "duals": res.duals, "rho": res.rho,
                "deploy": deploy,
                "p": {nid: p_links[rows] for nid, rows in groups}}
    return SegmentSolution(alloc, R, P, res, new_warm)


@dataclass
class SubproblemResult:
    allocation: Allocation
    eta_hat: float       # Dinkelbach root in normalized units
    dinkelbach: object
    admm_traces: list    # one residual trace per inner solve
    converged: bool


def solve_segment(spec: ProblemSpec, a: Association, expansion=None, rho: float = 1.0,
                  tol: float = 1e-4, max_iter: int = 2000, upsilon: float = 1e-4,
                  max_dinkelbach: int = 50, base: Allocation | None = None) -> SubproblemResult:
    """Dinkelbach outer loop with ADMM inner maximizers for one segment."""
    traces = []
    flags = []
    if segment_links(spec, a).count == 0:
        # empty service: nothing to optimize, zero EE
        alloc = scatter_powers(segment_links(spec, a), np.zeros((0, spec.scenario.N)),
                               base if base is not None else Allocation.initial(spec.scenario))
        return SubproblemResult(alloc, 0.0, None, [], True)

    def inner(eta, prev):
        warm = prev.warm if prev is not None else None
        sol = run_admm(spec, a, eta, rho, tol, max_iter, expansion, warm, base)
        traces.append(sol.admm.trace)
        flags.append(sol.admm.converged)
        return sol, sol.R, sol.P

    res = run_dinkelbach(inner, 0.0, upsilon, max_dinkelbach)
    return SubproblemResult(res.solution.allocation, res.eta, res, traces,
                            bool(res.converged and all(flags)))
