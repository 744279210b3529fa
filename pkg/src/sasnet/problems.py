"""The three segment problems (ABS, satellite, CBS): variables, exact EE
evaluation, feasibility checks, and the binary association space.

Rates are evaluated with cross-tier interference frozen at the cold start
(every foreign node at ``p_max``). Same-tier interference is zero whenever
the RB-uniqueness rows hold, which every accepted association satisfies.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import (FrozenInterference, GainTable, LinkClass, abs_gain_coeff,
                      build_gain_table, class_noise, frozen_interference)
from .energy import EEReport, FlightState, cruise_speed, flight_energy, flight_power, segment_ee
from .scenario import Scenario


class Segment(enum.Enum):
    ABS = "abs"
    SAT = "sat"
    CBS = "cbs"


CONSTRAINT_IDS = {
    Segment.ABS: tuple(range(31, 44)),
    Segment.SAT: (44, 45, 47, 48, 49),
    Segment.CBS: (46, 47, 48, 49),
}


@dataclass(frozen=True)
class Violation:
    constraint_id: int
    indices: tuple
    slack: float


def _tol(rhs) -> float:
    return 1e-9 * max(1.0, abs(float(rhs)))


# ------------------------------------------------------------------ variables

@dataclass(eq=False)
class Association:
    """Binary association tensors; ``backhaul[:, 0]`` is the satellite."""

    abs_lue: np.ndarray   # [U, K, M_l]
    backhaul: np.ndarray  # [U, 1 + C]
    sat_hue: np.ndarray   # [Z, M_h]
    sat_abs: np.ndarray   # [Z, U]
    cbs_hue: np.ndarray   # [C, Y, M_h]
    cbs_abs: np.ndarray   # [C, Y, U]

    @classmethod
    def empty(cls, s: Scenario) -> "Association":
        rp = s.radio
        return cls(
            np.zeros((s.U, rp.rb_abs, s.M_l), bool),
            np.zeros((s.U, 1 + s.C), bool),
            np.zeros((rp.rb_sat, s.M_h), bool),
            np.zeros((rp.rb_sat, s.U), bool),
            np.zeros((s.C, rp.rb_cbs, s.M_h), bool),
            np.zeros((s.C, rp.rb_cbs, s.U), bool),
        )

    def copy(self) -> "Association":
        return Association(*(np.array(getattr(self, f), bool) for f in _ASSOC_FIELDS))

    def deployed(self) -> np.ndarray:
        """ABSs serving at least one LUE."""
        return self.abs_lue.any(axis=(1, 2))

    def served_lues(self, u: int) -> list[int]:
        return sorted(int(m) for m in np.nonzero(self.abs_lue[u].any(axis=0))[0])


_ASSOC_FIELDS = ("abs_lue", "backhaul", "sat_hue", "sat_abs", "cbs_hue", "cbs_abs")


@dataclass(eq=False)
class Allocation:
    """Transmit powers per RB and slot, plus ABS trajectory and speed."""

    p_abs: np.ndarray         # [U, K, N]
    p_sat: np.ndarray         # [Z, N]
    p_cbs: np.ndarray         # [C, Y, N]
    deploy: np.ndarray        # [U, N, 3]
    speed: np.ndarray         # [U, N]
    flight_power: np.ndarray  # [U, N]

    @classmethod
    def initial(cls, s: Scenario) -> "Allocation":
        rp = s.radio
        v = cruise_speed(s.energy)
        pf = cruise_flight_power(s)
        return cls(
            np.zeros((s.U, rp.rb_abs, s.N)),
            np.zeros((rp.rb_sat, s.N)),
            np.zeros((s.C, rp.rb_cbs, s.N)),
            np.repeat(np.asarray(s.abs_init)[:, None, :], s.N, axis=1),
            np.full((s.U, s.N), v),
            np.full((s.U, s.N), pf),
        )

    def copy(self) -> "Allocation":
        return Allocation(self.p_abs.copy(), self.p_sat.copy(), self.p_cbs.copy(),
                          self.deploy.copy(), self.speed.copy(), self.flight_power.copy())


def cruise_flight_power(s: Scenario) -> float:
    e = flight_energy(FlightState(cruise_speed(s.energy)), s.energy)
    return flight_power(e, s.time.slot_length, s.config.literal_flight_power)


def merge(parts: dict[Segment, tuple[Association, Allocation]], s: Scenario
          ) -> tuple[Association, Allocation]:
    """Combine per-segment solutions into one network-wide pair."""
    a = Association.empty(s)
    x = Allocation.initial(s)
    for seg, (sa, sx) in parts.items():
        if seg is Segment.ABS:
            a.abs_lue, a.backhaul = sa.abs_lue.copy(), sa.backhaul.copy()
            x.p_abs, x.deploy = sx.p_abs.copy(), sx.deploy.copy()
            x.speed, x.flight_power = sx.speed.copy(), sx.flight_power.copy()
        elif seg is Segment.SAT:
            a.sat_hue, a.sat_abs = sa.sat_hue.copy(), sa.sat_abs.copy()
            x.p_sat = sx.p_sat.copy()
        else:
            a.cbs_hue, a.cbs_abs = sa.cbs_hue.copy(), sa.cbs_abs.copy()
            x.p_cbs = sx.p_cbs.copy()
    return a, x


# -------------------------------------------------------------------- context

@dataclass(frozen=True, eq=False)
class Context:
    """Scenario-derived quantities shared by all three segment problems."""

    scenario: Scenario
    gains: GainTable
    frozen: FrozenInterference
    sigma_abs: float
    sigma_sat: float
    sigma_cbs: float
    g0: float
    capacity: np.ndarray  # [U, 1 + C, N] backhaul rate in bit/s
    p_fly: float

    @property
    def s(self) -> Scenario:
        return self.scenario


def build_context(s: Scenario, frozen: FrozenInterference | None = None) -> Context:
    gains = build_gain_table(s)
    fr = frozen if frozen is not None else frozen_interference(s, gains)
    rp = s.radio
    sig_u = class_noise(s, LinkClass.AbsToLue)
    sig_s = class_noise(s, LinkClass.SatToAbs)
    sig_c = class_noise(s, LinkClass.CbsToAbs)
    cap = np.zeros((s.U, 1 + s.C, s.N))
    for u in range(s.U):
        g = gains.sat_abs[:, u, :].mean(axis=0)
        cap[u, 0] = rp.bandwidth_sat * np.log2(1 + rp.p_max * g / (fr.sat_abs[u] + sig_s))
        for c in range(s.C):
            g = gains.cbs_abs[c, :, u, :].mean(axis=0)
            cap[u, 1 + c] = rp.bandwidth_cbs * np.log2(1 + rp.p_max * g / (fr.cbs_abs[u] + sig_c))
    cap.setflags(write=False)
    return Context(s, gains, fr, sig_u, sig_s, sig_c, abs_gain_coeff(s), cap,
                   cruise_flight_power(s))


# ------------------------------------------------------------- problem specs

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    segment: Segment
    ctx: Context
    constraint_ids: tuple

    @property
    def scenario(self) -> Scenario:
        return self.ctx.scenario

    @property
    def bandwidth(self) -> float:
        rp = self.scenario.radio
        return {Segment.ABS: rp.bandwidth_abs, Segment.SAT: rp.bandwidth_sat,
                Segment.CBS: rp.bandwidth_cbs}[self.segment]

    def totals(self, a: Association, x: Allocation) -> tuple[float, float]:
        return segment_totals(self, a, x)

    def ee(self, a: Association, x: Allocation) -> float:
        R, P = segment_totals(self, a, x)
        return segment_ee(R, P)

    def check(self, a: Association, x: Allocation) -> list[Violation]:
        return check_feasibility(self, a, x)


def build_abs_problem(s: Scenario, frozen=None, ctx: Context | None = None) -> ProblemSpec:
    return ProblemSpec(Segment.ABS, ctx or build_context(s, frozen), CONSTRAINT_IDS[Segment.ABS])


def build_sat_problem(s: Scenario, frozen=None, ctx: Context | None = None) -> ProblemSpec:
    return ProblemSpec(Segment.SAT, ctx or build_context(s, frozen), CONSTRAINT_IDS[Segment.SAT])


def build_cbs_problem(s: Scenario, frozen=None, ctx: Context | None = None) -> ProblemSpec:
    return ProblemSpec(Segment.CBS, ctx or build_context(s, frozen), CONSTRAINT_IDS[Segment.CBS])


def build_problems(s: Scenario) -> dict[Segment, ProblemSpec]:
    ctx = build_context(s)
    return {seg: ProblemSpec(seg, ctx, CONSTRAINT_IDS[seg]) for seg in Segment}


# --------------------------------------------------------------------- links

@dataclass(frozen=True, eq=False)
class Links:
    """Active links of one segment for a fixed association.

    ``snr`` is the SNR per watt of transmit power, shape [L, N]. ``rb`` maps
    each link to its power variable; ``demand`` marks user links bound by the
    horizon rate threshold.
    """

    segment: Segment
    keys: tuple          # per link: (tx, rb, rx_kind, rx)
    snr: np.ndarray      # [L, N]
    demand: np.ndarray   # [L] bool
    owner: np.ndarray    # [L] ABS index for ABS links, else -1
    lue: np.ndarray      # [L] LUE index for ABS links, else -1

    @property
    def count(self) -> int:
        return len(self.keys)


def abs_link_keys(a: Association) -> list[tuple]:
    return [(int(u), int(k), "lue", int(m)) for u, k, m in zip(*np.nonzero(a.abs_lue))]


def segment_links(spec: ProblemSpec, a: Association, deploy=None) -> Links:
    ctx, s = spec.ctx, spec.scenario
    N = s.N
    fr, gt = ctx.frozen, ctx.gains
    keys, snr, dem, owner, lue = [], [], [], [], []
    if spec.segment is Segment.ABS:
        dep = np.asarray(s.abs_init)[:, None, :].repeat(N, 1) if deploy is None else np.asarray(deploy)
        for key in abs_link_keys(a):
            u, k, _, m = key
            D = np.sum((dep[u] - s.lue[:, m]) ** 2, axis=-1)
            keys.append(key)
            snr.append(ctx.g0 / D / (fr.abs_lue[m] + ctx.sigma_abs))
            dem.append(True)
            owner.append(u)
            lue.append(m)
    elif spec.segment is Segment.SAT:
        for z, m in zip(*np.nonzero(a.sat_hue)):
            keys.append((0, int(z), "hue", int(m)))
            snr.append(gt.sat_hue[z, m] / (fr.sat_hue[m] + ctx.sigma_sat))
            dem.append(True)
        for z, u in zip(*np.nonzero(a.sat_abs)):
            keys.append((0, int(z), "abs", int(u)))
            snr.append(gt.sat_abs[z, u] / (fr.sat_abs[u] + ctx.sigma_sat))
            dem.append(False)
        owner = [-1] * len(keys)
        lue = [-1] * len(keys)
    else:
        for c, y, m in zip(*np.nonzero(a.cbs_hue)):
            keys.append((int(c), int(y), "hue", int(m)))
            snr.append(gt.cbs_hue[c, y, m] / (fr.cbs_hue[m] + ctx.sigma_cbs))
            dem.append(True)
        for c, y, u in zip(*np.nonzero(a.cbs_abs)):
            keys.append((int(c), int(y), "abs", int(u)))
            snr.append(gt.cbs_abs[c, y, u] / (fr.cbs_abs[u] + ctx.sigma_cbs))
            dem.append(False)
        owner = [-1] * len(keys)
        lue = [-1] * len(keys)
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    snr_arr = np.array([snr[i] for i in order]).reshape(len(keys), N)
    return Links(spec.segment, tuple(keys[i] for i in order), snr_arr,
                 np.array([dem[i] for i in order], bool),
                 np.array([owner[i] for i in order], int),
                 np.array([lue[i] for i in order], int))


def link_powers(links: Links, x: Allocation) -> np.ndarray:
    """Gather the power of every link from the allocation, shape [L, N]."""
    N = x.deploy.shape[1]
    out = np.zeros((links.count, N))
    for i, (tx, rb, _, _) in enumerate(links.keys):
        if links.segment is Segment.ABS:
            out[i] = x.p_abs[tx, rb]
        elif links.segment is Segment.SAT:
            out[i] = x.p_sat[rb]
        else:
            out[i] = x.p_cbs[tx, rb]
    return out


def scatter_powers(links: Links, p: np.ndarray, x: Allocation) -> Allocation:
    """Write link powers into a copy of ``x`` (segment arrays reset to 0)."""
    y = x.copy()
    if links.segment is Segment.ABS:
        y.p_abs[:] = 0.0
    elif links.segment is Segment.SAT:
        y.p_sat[:] = 0.0
    else:
        y.p_cbs[:] = 0.0
    for i, (tx, rb, _, _) in enumerate(links.keys):
        if links.segment is Segment.ABS:
            y.p_abs[tx, rb] = p[i]
        elif links.segment is Segment.SAT:
            y.p_sat[rb] = p[i]
        else:
            y.p_cbs[tx, rb] = p[i]
    return y


def fixed_power(spec: ProblemSpec, a: Association, x: Allocation | None = None) -> float:
    """Horizon-summed power that does not depend on transmit powers."""
    s = spec.scenario
    rp = s.radio
    if spec.segment is Segment.ABS:
        dep = a.deployed()
        if x is None:
            return float(dep.sum() * s.N * spec.ctx.p_fly)
        return float(np.sum(x.flight_power[dep]))
    if spec.segment is Segment.SAT:
        return s.N * rp.p_circuit_sat
    return s.N * s.C * rp.p_circuit_cbs


def segment_totals(spec: ProblemSpec, a: Association, x: Allocation) -> tuple[float, float]:
    """Horizon sums (R bit/s, P W) with exact rates."""
    links = segment_links(spec, a, x.deploy)
    p = link_powers(links, x)
    R = float(spec.bandwidth * np.sum(np.log2(1 + p * links.snr)))
    P = float(np.sum(p) + fixed_power(spec, a, x))
    return R, P


def evaluate_ee(problems: dict[Segment, ProblemSpec], a: Association, x: Allocation) -> EEReport:
    vals = {}
    for seg, spec in problems.items():
        R, P = segment_totals(spec, a, x)
        vals[seg] = (segment_ee(R, P), R, P)
    u, sa, c = vals[Segment.ABS], vals[Segment.SAT], vals[Segment.CBS]
    return EEReport(u[0], sa[0], c[0], u[1], u[2], sa[1], sa[2], c[1], c[2])


# ---------------------------------------------------------------- feasibility

def _check_shapes(s: Scenario, a: Association, x: Allocation) -> None:
    rp = s.radio
    want = {
        "abs_lue": (s.U, rp.rb_abs, s.M_l), "backhaul": (s.U, 1 + s.C),
        "sat_hue": (rp.rb_sat, s.M_h), "sat_abs": (rp.rb_sat, s.U),
        "cbs_hue": (s.C, rp.rb_cbs, s.M_h), "cbs_abs": (s.C, rp.rb_cbs, s.U),
        "p_abs": (s.U, rp.rb_abs, s.N), "p_sat": (rp.rb_sat, s.N),
        "p_cbs": (s.C, rp.rb_cbs, s.N), "deploy": (s.U, s.N, 3),
        "speed": (s.U, s.N), "flight_power": (s.U, s.N),
    }
    for name, shape in want.items():
        obj = a if hasattr(a, name) else x
        got = np.shape(getattr(obj, name))
        if got != shape:
            raise ValueError(f"{name} has shape {got}, expected {shape}")


def _box(out, cid, idx, val, lo, hi):
    if val < lo - _tol(lo):
        out.append(Violation(cid, idx, float(lo - val)))
    elif val > hi + _tol(hi):
        out.append(Violation(cid, idx, float(val - hi)))


def _row_le(out, cid, idx, total, rhs):
    if total > rhs + _tol(rhs):
        out.append(Violation(cid, idx, float(total - rhs)))


def check_feasibility(spec: ProblemSpec, a: Association, x: Allocation) -> list[Violation]:
    s = spec.scenario
    _check_shapes(s, a, x)
    if spec.segment is Segment.ABS:
        out = _check_abs(spec, a, x)
    elif spec.segment is Segment.SAT:
        out = _check_sat(spec, a, x)
    else:
        out = _check_cbs(spec, a, x)
    return sorted(out, key=lambda v: (v.constraint_id, v.indices))


def _check_abs(spec: ProblemSpec, a: Association, x: Allocation) -> list[Violation]:
    s, ctx = spec.scenario, spec.ctx
    ep, rp, cfg = s.energy, s.radio, s.config
    U, N, L_u = s.U, s.N, s.time.slot_length
    out: list[Violation] = []
    dep = np.asarray(x.deploy, float)
    deployed = a.deployed()

    for u in range(U):
        gap = float(np.linalg.norm(dep[u, 0] - dep[u, N - 1]))
        if gap > _tol(0):
            out.append(Violation(31, (u,), gap))
        for n in range(N - 1):
            step = float(np.linalg.norm(dep[u, n + 1] - dep[u, n]))
            _row_le(out, 32, (u, n), step, ep.v_max * L_u)
        for n in range(N):
            _box(out, 36, (u, n), dep[u, n, 2], ep.h_min, ep.h_max)
        if not deployed[u]:
            continue
        for n in range(N):
            v = float(x.speed[u, n])
            _box(out, 35, (u, n), v, ep.v_min, ep.v_max)
            if v <= 0:
                continue
            E = flight_energy(FlightState(v), ep)
            if cfg.invert_energy_constraints:
                _row_le(out, 33, (u, n), E, ep.energy_threshold)
                need = flight_power(E, L_u, cfg.literal_flight_power)
                _row_le(out, 34, (u, n), float(x.flight_power[u, n]), need)
            else:
                _row_le(out, 33, (u, n), ep.energy_threshold, E)
                need = flight_power(E, L_u, cfg.literal_flight_power)
                _row_le(out, 34, (u, n), need, float(x.flight_power[u, n]))

    links = segment_links(spec, a, dep)
    p = link_powers(links, x)
    rates = rp.bandwidth_abs * np.log2(1 + np.maximum(p, 0) * links.snr)  # [L, N]

    # backhaul capacity per chosen node; an ABS without backhaul has none
    bh = [int(np.argmax(a.backhaul[u])) if a.backhaul[u].any() else -1 for u in range(U)]
    for j in range(1 + s.C):
        members = [u for u in range(U) if bh[u] == j]
        if not members:
            continue
        cid = 37 if j == 0 else 38
        for n in range(N):
            load = sum(rates[i, n] for i in range(links.count) if links.owner[i] in members)
            cap = float(sum(ctx.capacity[u, j, n] for u in members))
            _row_le(out, cid, (j, n), load, cap)
    for u in range(U):
        if bh[u] == -1:
            for n in range(N):
                load = float(sum(rates[i, n] for i in range(links.count) if links.owner[i] == u))
                if load > _tol(0):
                    out.append(Violation(37, (u, n), load))

    for i, (u, k, _, m) in enumerate(links.keys):
        _row_le(out, 39, (u, k, m), rp.rate_threshold, float(rates[i].sum()))

    for u in range(U):
        for k in range(rp.rb_abs):
            if not a.abs_lue[u, k].any():
                continue
            for n in range(N):
                _box(out, 40, (u, k, n), float(x.p_abs[u, k, n]), 0.0, rp.p_max)

    d2 = rp.safe_distance
    for i in range(U):
        for j in range(i + 1, U):
            for n in range(N):
                dist = float(np.linalg.norm(dep[i, n] - dep[j, n]))
                if dist < d2 - _tol(d2):
                    out.append(Violation(41, (i, j, n), d2 - dist))

    for k in range(rp.rb_abs):
        _row_le(out, 42, ("rb", k), int(a.abs_lue[:, k, :].sum()), 1)
    for m in range(s.M_l):
        _row_le(out, 42, ("lue", m), int(a.abs_lue[:, :, m].sum()), 1)
    for u in range(U):
        nb = int(a.backhaul[u].sum())
        _row_le(out, 43, (u,), nb, 1)
        if deployed[u] and nb == 0:
            out.append(Violation(43, (u,), 1.0))
    return out


def _demand_and_power(spec, links, p, out, backhaul_id=48, other_id=49, demand_id=47):
    rp = spec.scenario.radio
    B = spec.bandwidth
    rates = B * np.log2(1 + np.maximum(p, 0) * links.snr)
    for i, (tx, rb, kind, rx) in enumerate(links.keys):
        if kind == "hue":
            _row_le(out, demand_id, (tx, rb, rx), rp.rate_threshold, float(rates[i].sum()))
        cid = backhaul_id if kind == "abs" else other_id
        for n in range(p.shape[1]):
            _box(out, cid, (tx, rb, n), float(p[i, n]), 0.0, rp.p_max)


def _check_sat(spec: ProblemSpec, a: Association, x: Allocation) -> list[Violation]:
    s = spec.scenario
    out: list[Violation] = []
    Z = s.radio.rb_sat
    for z in range(Z):
        _row_le(out, 44, ("rb", z), int(a.sat_hue[z].sum() + a.sat_abs[z].sum()), 1)
    for m in range(s.M_h):
        _row_le(out, 44, ("hue", m), int(a.sat_hue[:, m].sum()), 1)
    for u in range(s.U):
        _row_le(out, 45, (u,), int(a.sat_abs[:, u].sum()), 1)
    if not any(v.constraint_id == 44 and v.indices[0] == "rb" for v in out):
        links = segment_links(spec, a)
        _demand_and_power(spec, links, link_powers(links, x), out)
    return out


def _check_cbs(spec: ProblemSpec, a: Association, x: Allocation) -> list[Violation]:
    s = spec.scenario
    out: list[Violation] = []
    Y = s.radio.rb_cbs
    for y in range(Y):
        _row_le(out, 46, ("rb", y), int(a.cbs_hue[:, y].sum() + a.cbs_abs[:, y].sum()), 1)
    for m in range(s.M_h):
        _row_le(out, 46, ("hue", m), int(a.cbs_hue[:, :, m].sum()), 1)
    for u in range(s.U):
        _row_le(out, 46, ("abs", u), int(a.cbs_abs[:, :, u].sum()), 1)
    if not any(v.constraint_id == 46 and v.indices[0] == "rb" for v in out):
        links = segment_links(spec, a)
        _demand_and_power(spec, links, link_powers(links, x), out)
    return out


# ------------------------------------------------------------ binary space

@dataclass(frozen=True, eq=False)
class AssocSpace:
    """Flattened association bits of one segment with linear rows ``A x <= b``."""

    segment: Segment
    names: tuple
    A: np.ndarray
    b: np.ndarray
    scenario: Scenario = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.names)

    def feasible(self, x) -> bool:
        return bool(np.all(self.A @ np.asarray(x, int) <= self.b))

    def to_assoc(self, x, base: Association | None = None) -> Association:
        a = (base or Association.empty(self.scenario)).copy()
        for fld in _SEG_FIELDS[self.segment]:
            getattr(a, fld)[...] = False
        for bit, name in zip(np.asarray(x, bool), self.names):
            if bit:
                getattr(a, name[0])[name[1:]] = True
        return a

    def from_assoc(self, a: Association) -> np.ndarray:
        return np.array([bool(getattr(a, n[0])[n[1:]]) for n in self.names], bool)


_SEG_FIELDS = {
    Segment.ABS: ("abs_lue", "backhaul"),
    Segment.SAT: ("sat_hue", "sat_abs"),
    Segment.CBS: ("cbs_hue", "cbs_abs"),
}


def assoc_space(spec: ProblemSpec) -> AssocSpace:
    s = spec.scenario
    rp = s.radio
    names: list[tuple] = []
    rows: list[tuple[dict, int]] = []
    if spec.segment is Segment.ABS:
        K, U, Ml = rp.rb_abs, s.U, s.M_l
        for u, k, m in itertools.product(range(U), range(K), range(Ml)):
            names.append(("abs_lue", u, k, m))
        for u, j in itertools.product(range(U), range(1 + s.C)):
            names.append(("backhaul", u, j))
        idx = {n: i for i, n in enumerate(names)}
        for k in range(K):
            rows.append(({idx[("abs_lue", u, k, m)]: 1 for u in range(U) for m in range(Ml)}, 1))
        for m in range(Ml):
            rows.append(({idx[("abs_lue", u, k, m)]: 1 for u in range(U) for k in range(K)}, 1))
        for u in range(U):
            bh = [idx[("backhaul", u, j)] for j in range(1 + s.C)]
            rows.append(({i: 1 for i in bh}, 1))
            links = [idx[("abs_lue", u, k, m)] for k in range(K) for m in range(Ml)]
            for li in links:
                rows.append(({li: 1, **{i: -1 for i in bh}}, 0))
            # canonical form: a backhaul is only chosen by an ABS that serves
            for i in bh:
                rows.append(({i: 1, **{li: -1 for li in links}}, 0))
    elif spec.segment is Segment.SAT:
        Z = rp.rb_sat
        for z, m in itertools.product(range(Z), range(s.M_h)):
            names.append(("sat_hue", z, m))
        for z, u in itertools.product(range(Z), range(s.U)):
            names.append(("sat_abs", z, u))
        idx = {n: i for i, n in enumerate(names)}
        for z in range(Z):
            rows.append(({**{idx[("sat_hue", z, m)]: 1 for m in range(s.M_h)},
                          **{idx[("sat_abs", z, u)]: 1 for u in range(s.U)}}, 1))
        for m in range(s.M_h):
            rows.append(({idx[("sat_hue", z, m)]: 1 for z in range(Z)}, 1))
        for u in range(s.U):
            rows.append(({idx[("sat_abs", z, u)]: 1 for z in range(Z)}, 1))
    else:
        Y, C = rp.rb_cbs, s.C
        for c, y, m in itertools.product(range(C), range(Y), range(s.M_h)):
            names.append(("cbs_hue", c, y, m))
        for c, y, u in itertools.product(range(C), range(Y), range(s.U)):
            names.append(("cbs_abs", c, y, u))
        idx = {n: i for i, n in enumerate(names)}
        for y in range(Y):
            rows.append(({**{idx[("cbs_hue", c, y, m)]: 1 for c in range(C) for m in range(s.M_h)},
                          **{idx[("cbs_abs", c, y, u)]: 1 for c in range(C) for u in range(s.U)}}, 1))
        for m in range(s.M_h):
            rows.append(({idx[("cbs_hue", c, y, m)]: 1 for c in range(C) for y in range(Y)}, 1))
        for u in range(s.U):
            rows.append(({idx[("cbs_abs", c, y, u)]: 1 for c in range(C) for y in range(Y)}, 1))
    rows = [r for r in rows if r[0]]
    A = np.zeros((len(rows), len(names)), int)
    b = np.zeros(len(rows), int)
    for r, (coef, rhs) in enumerate(rows):
        for i, v in coef.items():
            A[r, i] = v
        b[r] = rhs
    return AssocSpace(spec.segment, tuple(names), A, b, s)


def enumerate_space(space: AssocSpace, limit: int = 1 << 16) -> np.ndarray | None:
    """All feasible bit vectors (DFS with row pruning), or None past ``limit``."""
    n = space.size
    A, b = space.A, space.b
    # a row can still be satisfied if its minimum over the free bits fits
    neg = np.minimum(A, 0)
    rest_min = np.zeros((n + 1, A.shape[0]), int)
    for i in range(n - 1, -1, -1):
        rest_min[i] = rest_min[i + 1] + neg[:, i]
    out: list[np.ndarray] = []
    x = np.zeros(n, int)

    def dfs(i: int, partial: np.ndarray) -> bool:
        if np.any(partial + rest_min[i] > b):
            return True
        if i == n:
            out.append(x.copy())
            return len(out) <= limit
        for v in (0, 1):
            x[i] = v
            if not dfs(i + 1, partial + A[:, i] * v):
                return False
        x[i] = 0
        return True

    if not dfs(0, np.zeros(A.shape[0], int)):
        return None
    return np.array(out, bool).reshape(len(out), n)


# --------------------------------------------------------------- power models

@dataclass(frozen=True, eq=False)
class PowerModel:
    """Per link-slot power box and SNR for a fixed association and deployment.

    Demand enters per slot as ``r_th / N`` (a sufficient surrogate for the
    horizon sum) and each ABS splits its backhaul capacity equally among its
    links (a sufficient surrogate for the pooled group capacity).
    """

    links: Links
    lo: np.ndarray       # [L, N]
    hi: np.ndarray       # [L, N]
    fixed: float         # horizon-summed fixed power
    feasible: bool


def rate_share(spec: ProblemSpec, a: Association, links: Links) -> np.ndarray:
    """Per link-slot rate ceiling in bits/s/Hz (inf when uncapped)."""
    s = spec.scenario
    out = np.full(links.snr.shape, np.inf)
    if spec.segment is not Segment.ABS:
        return out
    for i, u in enumerate(links.owner):
        if not a.backhaul[u].any():
            out[i] = 0.0
            continue
        j = int(np.argmax(a.backhaul[u]))
        nl = int(np.sum(links.owner == u))
        out[i] = spec.ctx.capacity[u, j] / nl / s.radio.bandwidth_abs
    return out


def power_model(spec: ProblemSpec, a: Association, deploy=None) -> PowerModel:
    s = spec.scenario
    rp = s.radio
    links = segment_links(spec, a, deploy)
    target = rp.rate_threshold / (s.N * spec.bandwidth)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(links.demand[:, None], (2.0**target - 1) / links.snr, 0.0)
        share = rate_share(spec, a, links)
        hi = np.minimum(rp.p_max, np.where(np.isinf(share), np.inf, (2.0**share - 1) / links.snr))
    lo = np.nan_to_num(lo, nan=np.inf)
    hi = np.nan_to_num(hi, nan=0.0)
    feasible = bool(np.all(lo <= hi * (1 + 1e-12)))
    return PowerModel(links, lo, np.maximum(hi, 0.0), fixed_power(spec, a), feasible)


def best_response_powers(model: PowerModel, eta_hat: float) -> np.ndarray:
    """Maximizer of sum(log2(1 + snr p)) - eta * sum(p) over the box."""
    snr = model.links.snr
    if eta_hat <= 0:
        return model.hi.copy()
    with np.errstate(divide="ignore"):
        p = 1.0 / (eta_hat * np.log(2.0)) - 1.0 / snr
    return np.clip(p, model.lo, model.hi)


def normalized_totals(model: PowerModel, p: np.ndarray) -> tuple[float, float]:
    R = float(np.sum(np.log2(1 + p * model.links.snr)))
    return R, float(np.sum(p) + model.fixed)


def power_only_dinkelbach(model: PowerModel, upsilon: float = 1e-4, max_iter: int = 50
                          ) -> tuple[np.ndarray, float]:
    """Closed-form Dinkelbach for a fixed association and deployment.

    Returns link powers and the normalized EE (bit/s/Hz per W).
    """
    if model.links.count == 0:
        return np.zeros_like(model.lo), 0.0
    eta = 0.0
    best_p, best_eta = None, -np.inf
    for _ in range(max_iter):
        p = best_response_powers(model, eta)
        R, P = normalized_totals(model, p)
        F = R - eta * P
        ratio = R / P if P > 0 else 0.0
        if ratio > best_eta:
            best_p, best_eta = p, ratio
        if F <= upsilon:
            break
        eta = ratio
    return best_p, best_eta


def fast_value(spec: ProblemSpec, a: Association, deploy=None, upsilon: float = 1e-4
               ) -> float | None:
    """Normalized segment EE of ``a`` with powers only; None if infeasible."""
    model = power_model(spec, a, deploy)
    if not model.feasible:
        return None
    if spec.segment is Segment.ABS:
        if any(not a.backhaul[u].any() for u in np.nonzero(a.deployed())[0]):
            return None
    return power_only_dinkelbach(model, upsilon)[1]


def power_only_solution(spec: ProblemSpec, a: Association, base: Allocation,
                        upsilon: float = 1e-4) -> tuple[Allocation, float] | None:
    model = power_model(spec, a, base.deploy)
    if not model.feasible:
        return None
    p, eta = power_only_dinkelbach(model, upsilon)
    return scatter_powers(model.links, p, base), eta


def flip_variants(space: AssocSpace, x: np.ndarray, b: int, ctx: Context) -> list[np.ndarray]:
    """Row-feasible associations reached by flipping bit ``b`` and repairing.

    Conflicting bits are dropped; for the ABS segment a newly active ABS gets
    each backhaul option, and an ABS losing its backhaul either switches or
    stops serving.
    """
    x = np.asarray(x, bool).copy()
    names = space.names
    y = x.copy()
    y[b] = not y[b]
    if y[b]:
        # drop every other bit sharing a capacity-one row with b
        for r in np.nonzero((space.A[:, b] > 0) & (space.b == 1))[0]:
            for i in np.nonzero(space.A[r] > 0)[0]:
                if i != b:
                    y[i] = False
    if space.segment is not Segment.ABS:
        return [y] if space.feasible(y) else []
    idx = {n: i for i, n in enumerate(names)}
    s = space.scenario
    U, J = s.U, 1 + s.C
    base_variants = [y]
    name = names[b]
    if name[0] == "backhaul" and not y[b]:
        u = name[1]
        stop = y.copy()
        for i, n in enumerate(names):
            if n[0] == "abs_lue" and n[1] == u:
                stop[i] = False
        base_variants = [stop]
        for j in range(J):
            if j != name[2]:
                sw = y.copy()
                sw[idx[("backhaul", u, j)]] = True
                base_variants.append(sw)
    out = []
    for v in base_variants:
        expanded = [v]
        for u in range(U):
            active = any(v[i] for i, n in enumerate(names) if n[0] == "abs_lue" and n[1] == u)
            bh = [idx[("backhaul", u, j)] for j in range(J)]
            if active and not v[bh].any():
                nxt = []
                for w in expanded:
                    for i in bh:
                        w2 = w.copy()
                        w2[i] = True
                        nxt.append(w2)
                expanded = nxt
            elif not active and v[bh].any():
                for w in expanded:
                    w[bh] = False
        out.extend(expanded)
    uniq = {}
    for v in out:
        if space.feasible(v):
            uniq.setdefault(v.tobytes(), v)
    return list(uniq.values())


