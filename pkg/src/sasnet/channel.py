"""Channel gains, interference, SINR and Shannon rates for the five link classes."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .scenario import ClassParams, Scenario, noise_power

NULL_EPS = 1e-9


class LinkClass(enum.Enum):
    AbsToLue = "abs_lue"
    SatToAbs = "sat_abs"
    CbsToAbs = "cbs_abs"
    SatToHue = "sat_hue"
    CbsToHue = "cbs_hue"


_CLASS_INDEX = {c: i for i, c in enumerate(LinkClass)}


def distance(a, b) -> np.ndarray:
    """Euclidean distance over the last axis."""
    return np.linalg.norm(np.asarray(a, float) - np.asarray(b, float), axis=-1)


def abs_lue_large_scale(d_u, d_ml, xi0: float):
    """Large-scale power gain ``xi0 / ||d_u - d_ml||^2``."""
    sq = np.sum((np.asarray(d_u, float) - np.asarray(d_ml, float)) ** 2, axis=-1)
    if np.any(sq <= 0):
        raise ZeroDivisionError("ABS and LUE positions coincide")
    return xi0 / sq


def mmw_large_scale_db(d, params: ClassParams, psi=0.0, d0: float = 1.0):
    """Log-distance pathloss in dB with additive shadowing ``psi``."""
    d = np.asarray(d, float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = params.omega + params.zeta * 10 * np.log10(d / d0) + psi
    return out if out.ndim else float(out)


def rician_small_scale(K, xi):
    """Amplitude coefficient for Rician factor ``K`` and scatter draw ``xi``."""
    K = np.asarray(K, float)
    if np.any(K < 0):
        raise ValueError("Rician factor must be non-negative")
    los = np.where(np.isinf(K), 1.0, np.sqrt(K / (1 + np.where(np.isinf(K), 0.0, K))))
    nlos = np.where(np.isinf(K), 0.0, np.sqrt(1 / (1 + np.where(np.isinf(K), 0.0, K))))
    out = los + nlos * np.asarray(xi, float)
    return out if out.ndim else float(out)


def composite_mmw_gain(d, params: ClassParams, psi=0.0, xi=0.0, d0: float = 1.0):
    """Power gain of a mmW link: squared amplitude of pathloss times fading."""
    d = np.asarray(d, float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    amp = (d0 / d) ** (params.zeta / 2) * 10 ** (-(params.omega + np.asarray(psi)) / 20)
    out = (amp * rician_small_scale(params.rician_k, xi)) ** 2
    return out if np.ndim(out) else float(out)


def ce2r_pathloss_db(d, h_c, h_mh, lam):
    """Curved-earth two-ray loss in dB and a flag marking destructive nulls.

    Nulls report ``+inf`` dB rather than raising.
    """
    d = np.asarray(d, float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if np.any(np.asarray(h_c) <= 0) or np.any(np.asarray(h_mh) <= 0):
        raise ValueError("antenna heights must be positive")
    s = np.sin(2 * np.pi * np.asarray(h_c) * np.asarray(h_mh) / (lam * d))
    null = np.abs(s) <= NULL_EPS
    with np.errstate(divide="ignore"):
        loss = -10 * np.log10((lam / (4 * np.pi * d)) ** 2 * (2 * np.where(null, 1.0, s)) ** 2)
    loss = np.where(null, np.inf, loss)
    if loss.ndim == 0:
        return float(loss), bool(null)
    return loss, null


def ce2r_gain(d, h_c, h_mh, lam, floor: float = 1e-30):
    """CE2R power gain clamped to ``floor`` (nulls included)."""
    loss, _ = ce2r_pathloss_db(d, h_c, h_mh, lam)
    g = np.power(10.0, -np.asarray(loss) / 10)
    return np.maximum(g, floor)


def sinr(p, g, omega, sigma2):
    if np.any(np.asarray(sigma2) <= 0):
        raise ValueError("noise power must be positive")
    return np.asarray(p) * np.asarray(g) / (np.asarray(omega) + sigma2)


def shannon_rate(B, gamma):
    if np.any(np.asarray(B) <= 0):
        raise ValueError("bandwidth must be positive")
    out = np.asarray(B) * np.log2(1 + np.asarray(gamma, float))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class LinkState:
    tx: np.ndarray
    rx: np.ndarray
    gain: float
    interference: float
    sinr: float
    rate: float


def link_state(cls: LinkClass, tx, rx, p: float, gain: float, omega: float,
               s: Scenario) -> LinkState:
    B = s.radio.classes[cls.value].bandwidth
    g = sinr(p, gain, omega, noise_power(s.radio, B))
    return LinkState(np.asarray(tx, float), np.asarray(rx, float), gain, omega,
                     float(g), float(shannon_rate(B, g)))


# ---------------------------------------------------------------- gain table

def _link_rng(seed: int, cls: LinkClass, *ids: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(4, _CLASS_INDEX[cls]) + ids)
    return np.random.default_rng(ss)


def _mmw_draws(s: Scenario, cls: LinkClass, ids: tuple, n: int):
    cp = s.radio.classes[cls.value]
    r = _link_rng(s.seed, cls, *ids)
    psi = cp.delta * r.standard_normal(n)
    xi = r.standard_normal(n)
    return psi, xi


def abs_gain(s: Scenario, pos_abs, pos_rx) -> np.ndarray:
    """Mean power gain from ABS positions to sea-surface receivers.

    Broadcasts over leading axes.
    """
    return abs_gain_coeff(s) * abs_lue_large_scale(pos_abs, pos_rx, 1.0)


def abs_gain_coeff(s: Scenario) -> float:
    rp = s.radio
    return rp.classes["abs_lue"].power_scale * rp.reference_gain * rp.antenna_factor


@dataclass(frozen=True, eq=False)
class GainTable:
    """Per-slot gains computed once per scenario and shared read-only.

    ABS-originated gains depend on the deployment and are computed on demand
    with :func:`abs_gain`.
    """

    sat_hue: np.ndarray   # [Z, M_h, N]
    sat_abs: np.ndarray   # [Z, U, N]
    cbs_abs: np.ndarray   # [C, Y, U, N]
    cbs_hue: np.ndarray   # [C, Y, M_h, N]
    cbs_lue: np.ndarray   # [C, M_l, N]
    cbs_hue_null: np.ndarray  # [C, M_h, N] raw CE2R null flags


def _ro(a):
    a = np.asarray(a, float)
    a.setflags(write=False)
    return a


def build_gain_table(s: Scenario) -> GainTable:
    rp = s.radio
    N, U, C, Mh, Ml = s.N, s.U, s.C, s.M_h, s.M_l
    Z, Y = rp.rb_sat, rp.rb_cbs
    d0 = rp.reference_distance
    ant = rp.antenna_factor
    lam = rp.wavelength
    cfg = s.config

    sat_hue = np.zeros((Z, Mh, N))
    cp = rp.classes["sat_hue"]
    for z in range(Z):
        for m in range(Mh):
            psi, xi = _mmw_draws(s, LinkClass.SatToHue, (0, z, m), N)
            rx = s.hue[:, m, :] + np.array([0, 0, cfg.hue_antenna_height])
            sat_hue[z, m] = ant * composite_mmw_gain(distance(s.sat, rx), cp, psi, xi, d0)

    # satellite distance held constant over the horizon: use initial ABS spots
    sat_abs = np.zeros((Z, U, N))
    cp = rp.classes["sat_abs"]
    for z in range(Z):
        for u in range(U):
            psi, xi = _mmw_draws(s, LinkClass.SatToAbs, (0, z, u), N)
            d = distance(s.sat, s.abs_init[u])
            sat_abs[z, u] = ant * composite_mmw_gain(np.full(N, d), cp, psi, xi, d0)

    cbs_abs = np.zeros((C, Y, U, N))
    cp = rp.classes["cbs_abs"]
    for c in range(C):
        for y in range(Y):
            for u in range(U):
                psi, xi = _mmw_draws(s, LinkClass.CbsToAbs, (c, y, u), N)
                d = distance(s.cbs[c], s.abs_init[u])
                cbs_abs[c, y, u] = ant * composite_mmw_gain(np.full(N, d), cp, psi, xi, d0)

    cbs_hue = np.zeros((C, Y, Mh, N))
    nulls = np.zeros((C, Mh, N), bool)
    for c in range(C):
        if Mh:
            d = distance(s.cbs[c], s.hue + np.array([0, 0, cfg.hue_antenna_height]))  # [N, Mh]
            _, null = ce2r_pathloss_db(d, s.cbs[c, 2], cfg.hue_antenna_height, lam)
            g = ant * ce2r_gain(d, s.cbs[c, 2], cfg.hue_antenna_height, lam, rp.null_floor)
            cbs_hue[c, :] = np.maximum(g.T, rp.null_floor)[None]
            nulls[c] = np.asarray(null).T

    cbs_lue = np.zeros((C, Ml, N))
    for c in range(C):
        if Ml:
            d = distance(s.cbs[c], s.lue + np.array([0, 0, cfg.lue_antenna_height]))
            g = ant * ce2r_gain(d, s.cbs[c, 2], cfg.lue_antenna_height, lam, rp.null_floor)
            cbs_lue[c] = np.maximum(g.T, rp.null_floor)

    return GainTable(_ro(sat_hue), _ro(sat_abs), _ro(cbs_abs), _ro(cbs_hue),
                     _ro(cbs_lue), _ro(nulls))


def dump_gains(s: Scenario, gt: GainTable, out: TextIO, deployment=None) -> None:
    """Write every gain as CSV rows ``tx_id, rx_id, class, slot, gain``."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["tx_id", "rx_id", "class", "slot", "gain"])
    dep = s.abs_init[:, None, :].repeat(s.N, 1) if deployment is None else np.asarray(deployment)
    for n in range(s.N):
        for u in range(s.U):
            for m in range(s.M_l):
                g = abs_gain(s, dep[u, n], s.lue[n, m])
                w.writerow([f"abs{u}", f"lue{m}", "abs_lue", n, repr(float(g))])
        for z in range(gt.sat_abs.shape[0]):
            for u in range(s.U):
                w.writerow([f"sat:rb{z}", f"abs{u}", "sat_abs", n, repr(float(gt.sat_abs[z, u, n]))])
            for m in range(s.M_h):
                w.writerow([f"sat:rb{z}", f"hue{m}", "sat_hue", n, repr(float(gt.sat_hue[z, m, n]))])
        for c in range(s.C):
            for y in range(gt.cbs_abs.shape[1]):
                for u in range(s.U):
                    w.writerow([f"cbs{c}:rb{y}", f"abs{u}", "cbs_abs", n, repr(float(gt.cbs_abs[c, y, u, n]))])
                for m in range(s.M_h):
                    w.writerow([f"cbs{c}:rb{y}", f"hue{m}", "cbs_hue", n, repr(float(gt.cbs_hue[c, y, m, n]))])


# -------------------------------------------------------------- interference

def _overlap(b_rx: float, b_tx: float) -> float:
    return min(1.0, b_rx / b_tx)


def interference(cls: LinkClass, rx: int, tx: int, rb: int, slot: int, allocation,
                 s: Scenario, gains: GainTable, part: str = "all") -> float:
    """Aggregate interference (W) at receiver ``rx`` of a ``cls`` link.

    ``tx`` is the serving node (ABS index, CBS index, or 0 for the satellite)
    and ``rb`` the resource block. Same-tier terms count co-channel users of
    the same RB index; cross-tier terms take each foreign node's strongest
    per-RB power scaled by the band overlap. ``part`` selects ``"same"``,
    ``"cross"`` or ``"all"``.
    """
    if part not in ("all", "same", "cross"):
        raise ValueError(f"unknown part {part!r}")
    same = part in ("all", "same")
    cross = part in ("all", "cross")
    rp = s.radio
    p_abs = np.asarray(allocation.p_abs)
    p_cbs = np.asarray(allocation.p_cbs)
    dep = np.asarray(allocation.deploy)
    n = slot
    total = 0.0
    B_u, B_s, B_c = rp.bandwidth_abs, rp.bandwidth_sat, rp.bandwidth_cbs

    if cls is LinkClass.AbsToLue:
        if same:
            for u2 in range(s.U):
                if u2 != tx and p_abs[u2, rb, n] > 0:
                    total += p_abs[u2, rb, n] * abs_gain(s, dep[u2, n], s.lue[n, rx])
        if cross:
            for c in range(s.C):
                total += p_cbs[c, :, n].max(initial=0.0) * gains.cbs_lue[c, rx, n] * _overlap(B_u, B_c)
    elif cls is LinkClass.SatToAbs:
        if cross:
            for c in range(s.C):
                g = gains.cbs_abs[c, :, rx, n].mean()
                total += p_cbs[c, :, n].max(initial=0.0) * g * _overlap(B_s, B_c)
    elif cls is LinkClass.CbsToAbs:
        if same:
            for c2 in range(s.C):
                if c2 != tx:
                    total += p_cbs[c2, rb, n] * gains.cbs_abs[c2, rb, rx, n]
    elif cls is LinkClass.SatToHue:
        if cross:
            for u in range(s.U):
                total += (p_abs[u, :, n].max(initial=0.0) * abs_gain(s, dep[u, n], s.hue[n, rx])
                          * _overlap(B_s, B_u))
            for c in range(s.C):
                total += p_cbs[c, :, n].max(initial=0.0) * gains.cbs_hue[c, 0, rx, n] * _overlap(B_s, B_c)
    elif cls is LinkClass.CbsToHue:
        if cross:
            for u in range(s.U):
                total += (p_abs[u, :, n].max(initial=0.0) * abs_gain(s, dep[u, n], s.hue[n, rx])
                          * _overlap(B_c, B_u))
        if same:
            for c2 in range(s.C):
                if c2 != tx:
                    total += p_cbs[c2, rb, n] * gains.cbs_hue[c2, rb, rx, n]
    return float(total)


@dataclass(frozen=True, eq=False)
class FrozenInterference:
    """Cross-tier interference held fixed inside the segment solves (W)."""

    abs_lue: np.ndarray  # [M_l, N]
    sat_abs: np.ndarray  # [U, N]
    cbs_abs: np.ndarray  # [U, N]
    sat_hue: np.ndarray  # [M_h, N]
    cbs_hue: np.ndarray  # [M_h, N]


@dataclass
class _ColdStart:
    p_abs: np.ndarray
    p_sat: np.ndarray
    p_cbs: np.ndarray
    deploy: np.ndarray


def cold_start_powers(s: Scenario) -> _ColdStart:
    rp = s.radio
    N = s.N
    return _ColdStart(
        np.full((s.U, rp.rb_abs, N), rp.p_max),
        np.full((rp.rb_sat, N), rp.p_max),
        np.full((s.C, rp.rb_cbs, N), rp.p_max),
        np.repeat(np.asarray(s.abs_init)[:, None, :], N, axis=1),
    )


def frozen_interference(s: Scenario, gains: GainTable, allocation=None) -> FrozenInterference:
    """Cross-tier interference at ``allocation`` (every node at p_max if None)."""
    alloc = allocation if allocation is not None else cold_start_powers(s)
    N = s.N

    def grid(cls, count):
        out = np.zeros((count, N))
        for i in range(count):
            for n in range(N):
                out[i, n] = interference(cls, i, -1, 0, n, alloc, s, gains, part="cross")
        out.setflags(write=False)
        return out

    return FrozenInterference(
        abs_lue=grid(LinkClass.AbsToLue, s.M_l),
        sat_abs=grid(LinkClass.SatToAbs, s.U),
        cbs_abs=grid(LinkClass.CbsToAbs, s.U),
        sat_hue=grid(LinkClass.SatToHue, s.M_h),
        cbs_hue=grid(LinkClass.CbsToHue, s.M_h),
    )


def class_noise(s: Scenario, cls: LinkClass) -> float:
    return noise_power(s.radio, s.radio.classes[cls.value].bandwidth)

