"""Scenario generation, validation and persistence.

A scenario is an immutable snapshot of the maritime network: one satellite,
coastline base stations (CBS), fixed-wing aerial base stations (ABS), low-end
users (LUE) near the coast and high-end users (HUE) spread over the sea.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

SPEED_OF_LIGHT = 299_792_458.0

# substream order is fixed so that adding nodes of one population never
# perturbs the draws of another
_STREAMS = ("abs", "lue", "hue", "route", "fading")


class ConfigError(ValueError):
    """Invalid configuration; ``keys`` lists the offending entries."""

    def __init__(self, message: str, keys: list[str] | None = None):
        super().__init__(message)
        self.keys = list(keys or [])


@dataclass(frozen=True)
class ScenarioConfig:
    # populations
    abs_count: int = 2
    lue_count: int = 8
    hue_count: int = 4
    cbs_count: int = 1
    # geometry (meters)
    region_size: float = 1.0e6
    lue_area_size: float = 2.0e4
    lue_area_origin: float = 0.0
    sat_altitude: float = 2.0e5
    abs_altitude: float = 30.0
    cbs_height: float = 30.0
    hue_antenna_height: float = 5.0
    lue_antenna_height: float = 2.0
    cbs_radius: float = 1.0e5
    # time grid
    horizon: float = 400.0
    slots: int = 4
    # HUE drift
    hue_speed: float = 10.0
    route_legs: int = 3
    # radio
    carrier_frequency: float = 30.0e9
    bandwidth_sat: float = 10.0e6
    bandwidth_cbs: float = 10.0e6
    bandwidth_abs: float = 10.0e3
    noise_density_dbm: float = -174.0
    p_max_dbm: float = 33.0
    antenna_gain_tx_dbi: float = 25.0
    antenna_gain_rx_dbi: float = 25.0
    apply_antenna_gains: bool = False
    omega_sat_abs: float = 46.4
    omega_cbs_abs: float = 46.4
    omega_sat_hue: float = 46.4
    zeta_sat_abs: float = 2.0
    zeta_cbs_abs: float = 2.0
    zeta_sat_hue: float = 2.0
    delta_sat_abs: float = 0.1
    delta_cbs_abs: float = 0.1
    delta_sat_hue: float = 0.1
    rician_k_sat_abs: float = 10.0
    rician_k_cbs_abs: float = 10.0
    rician_k_sat_hue: float = 10.0
    reference_distance: float = 1.0
    reference_gain: float | None = None
    abs_lue_power_scale: float = 1.53
    rb_abs: int = 2
    rb_sat: int = 2
    rb_cbs: int = 2
    p_circuit_sat: float = 10.0
    p_circuit_cbs: float = 10.0
    rate_threshold: float = 1.0e5
    safe_distance: float = 500.0
    null_floor: float = 1.0e-30
    # propulsion
    kappa: float = 9.26e-4
    zeta_drag: float = 2250.0
    gravity: float = 9.81
    payload_mass: float = 2.0
    time_step: float = 1.0
    energy_threshold: float | None = None
    v_min: float = 10.0
    v_max: float = 50.0
    h_min: float = 10.0
    h_max: float = 300.0
    invert_energy_constraints: bool = False
    literal_flight_power: bool = False
    # solver knobs
    epsilon: float = 1.0e-3
    upsilon: float = 1.0e-4
    rho: float = 1.0
    max_benders_iter: int = 100
    admm_tol: float = 1.0e-4
    admm_max_iter: int = 2000
    chi_down: float = -1.0e6
    chi_up: float = 1.0e6
    power_levels: int = 16
    grid_points: int = 9
    random_max_tries: int = 10_000
    record_wall_time: bool = False

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return config_from_dict({**self.to_dict(), **changes})

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(key: str, value: Any) -> Any:
    kind = _FIELD_TYPES[key]
    if value is None:
        if "None" in kind:
            return None
        raise ConfigError(f"config key '{key}' must not be null", [key])
    try:
        if kind.startswith("bool"):
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false", "on", "off"):
                return value.lower() in ("true", "on")
            raise TypeError
        if kind.startswith("int"):
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise TypeError
            return int(float(value))
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key '{key}' has invalid value {value!r}", [key]) from None


def config_from_dict(values: Mapping[str, Any]) -> ScenarioConfig:
    """Build a config, rejecting unknown keys and checking invariants."""
    unknown = sorted(k for k in values if k not in _FIELD_TYPES)
    if unknown:
        raise ConfigError("unknown config key(s): " + ", ".join(unknown), unknown)
    cfg = ScenarioConfig(**{k: _coerce(k, v) for k, v in values.items()})
    bad = _config_problems(cfg)
    if bad:
        raise ConfigError("invalid config value(s): " + ", ".join(bad), bad)
    return cfg


def _config_problems(cfg: ScenarioConfig) -> list[str]:
    bad = []
    for key in ("abs_count", "cbs_count", "slots", "rb_abs", "rb_sat", "rb_cbs",
                "route_legs", "power_levels", "grid_points", "max_benders_iter",
                "admm_max_iter", "random_max_tries"):
        if getattr(cfg, key) <= 0:
            bad.append(key)
    for key in ("lue_count", "hue_count"):
        if getattr(cfg, key) < 0:
            bad.append(key)
    if cfg.slots < 2 and "slots" not in bad:
        bad.append("slots")
    for key in ("region_size", "lue_area_size", "sat_altitude", "abs_altitude",
                "cbs_height", "hue_antenna_height", "lue_antenna_height", "cbs_radius",
                "horizon", "carrier_frequency", "bandwidth_sat", "bandwidth_cbs",
                "bandwidth_abs", "reference_distance", "abs_lue_power_scale",
                "p_circuit_sat", "p_circuit_cbs", "rate_threshold", "safe_distance",
                "null_floor", "kappa", "zeta_drag", "gravity", "payload_mass",
                "time_step", "v_min", "v_max", "h_min", "h_max", "epsilon", "upsilon",
                "rho", "admm_tol", "chi_up"):
        if not getattr(cfg, key) > 0:
            bad.append(key)
    for key in ("zeta_sat_abs", "zeta_cbs_abs", "zeta_sat_hue"):
        if getattr(cfg, key) < 1:
            bad.append(key)
    for key in ("rician_k_sat_abs", "rician_k_cbs_abs", "rician_k_sat_hue",
                "delta_sat_abs", "delta_cbs_abs", "delta_sat_hue", "hue_speed"):
        if getattr(cfg, key) < 0:
            bad.append(key)
    if cfg.reference_gain is not None and cfg.reference_gain <= 0:
        bad.append("reference_gain")
    if cfg.energy_threshold is not None and cfg.energy_threshold < 0:
        bad.append("energy_threshold")
    if cfg.v_min >= cfg.v_max:
        bad += [k for k in ("v_min", "v_max") if k not in bad]
    if cfg.h_min >= cfg.h_max:
        bad += [k for k in ("h_min", "h_max") if k not in bad]
    if not cfg.h_min <= cfg.abs_altitude <= cfg.h_max:
        bad.append("abs_altitude")
    if cfg.lue_area_origin < 0 or cfg.lue_area_origin + cfg.lue_area_size > cfg.region_size:
        bad.append("lue_area_origin")
    if cfg.chi_down >= cfg.chi_up:
        bad.append("chi_down")
    return bad


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a key-value mapping")
    return config_from_dict(data)


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    slots: int
    slot_length: float


@dataclass(frozen=True)
class ClassParams:
    """Per link-class radio parameters."""

    bandwidth: float
    omega: float = 0.0
    zeta: float = 2.0
    delta: float = 0.0
    rician_k: float = 0.0
    power_scale: float = 1.0


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency: float
    bandwidth_sat: float
    bandwidth_cbs: float
    bandwidth_abs: float
    noise_density_dbm: float
    p_max: float
    antenna_gain_tx_dbi: float
    antenna_gain_rx_dbi: float
    apply_antenna_gains: bool
    reference_distance: float
    reference_gain: float
    classes: Mapping[str, ClassParams]
    rb_abs: int
    rb_sat: int
    rb_cbs: int
    p_circuit_sat: float
    p_circuit_cbs: float
    rate_threshold: float
    safe_distance: float
    null_floor: float

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def antenna_factor(self) -> float:
        if not self.apply_antenna_gains:
            return 1.0
        return 10 ** ((self.antenna_gain_tx_dbi + self.antenna_gain_rx_dbi) / 10)


@dataclass(frozen=True)
class EnergyParams:
    kappa: float
    zeta: float
    gravity: float
    payload_mass: float
    time_step: float
    energy_threshold: float
    v_min: float
    v_max: float
    h_min: float
    h_max: float


def noise_power(radio: RadioParams, bandwidth: float) -> float:
    """Thermal noise power in watts over ``bandwidth`` Hz."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return 10 ** ((radio.noise_density_dbm + 10 * math.log10(bandwidth) - 30) / 10)


def radio_params(cfg: ScenarioConfig) -> RadioParams:
    lam = SPEED_OF_LIGHT / cfg.carrier_frequency
    ref_gain = cfg.reference_gain
    if ref_gain is None:
        # free-space power gain at the reference distance
        ref_gain = (lam / (4 * math.pi * cfg.reference_distance)) ** 2
    classes = {
        "abs_lue": ClassParams(cfg.bandwidth_abs, power_scale=cfg.abs_lue_power_scale),
        "sat_abs": ClassParams(cfg.bandwidth_sat, cfg.omega_sat_abs, cfg.zeta_sat_abs,
                               cfg.delta_sat_abs, cfg.rician_k_sat_abs),
        "cbs_abs": ClassParams(cfg.bandwidth_cbs, cfg.omega_cbs_abs, cfg.zeta_cbs_abs,
                               cfg.delta_cbs_abs, cfg.rician_k_cbs_abs),
        "sat_hue": ClassParams(cfg.bandwidth_sat, cfg.omega_sat_hue, cfg.zeta_sat_hue,
                               cfg.delta_sat_hue, cfg.rician_k_sat_hue),
        "cbs_hue": ClassParams(cfg.bandwidth_cbs),
    }
    return RadioParams(
        carrier_frequency=cfg.carrier_frequency,
        bandwidth_sat=cfg.bandwidth_sat,
        bandwidth_cbs=cfg.bandwidth_cbs,
        bandwidth_abs=cfg.bandwidth_abs,
        noise_density_dbm=cfg.noise_density_dbm,
        p_max=10 ** (cfg.p_max_dbm / 10) / 1000,
        antenna_gain_tx_dbi=cfg.antenna_gain_tx_dbi,
        antenna_gain_rx_dbi=cfg.antenna_gain_rx_dbi,
        apply_antenna_gains=cfg.apply_antenna_gains,
        reference_distance=cfg.reference_distance,
        reference_gain=ref_gain,
        classes=classes,
        rb_abs=cfg.rb_abs,
        rb_sat=cfg.rb_sat,
        rb_cbs=cfg.rb_cbs,
        p_circuit_sat=cfg.p_circuit_sat,
        p_circuit_cbs=cfg.p_circuit_cbs,
        rate_threshold=cfg.rate_threshold,
        safe_distance=cfg.safe_distance,
        null_floor=cfg.null_floor,
    )


def energy_params(cfg: ScenarioConfig) -> EnergyParams:
    e_th = cfg.energy_threshold
    if e_th is None:
        v_star = (cfg.zeta_drag / (3 * cfg.kappa)) ** 0.25
        v_star = min(max(v_star, cfg.v_min), cfg.v_max)
        e_th = 0.9 * (cfg.kappa * v_star**3 + cfg.zeta_drag / v_star)
    return EnergyParams(cfg.kappa, cfg.zeta_drag, cfg.gravity, cfg.payload_mass,
                        cfg.time_step, e_th, cfg.v_min, cfg.v_max, cfg.h_min, cfg.h_max)


# ------------------------------------------------------------------ scenario

def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable network snapshot. Positions are arrays of (x, y, z) in meters.

    ``lue`` and ``hue`` carry one row block per slot: shape (N, M, 3).
    """

    config: ScenarioConfig
    seed: int
    sat: np.ndarray
    cbs: np.ndarray
    abs_init: np.ndarray
    lue: np.ndarray
    hue: np.ndarray
    time: TimeGrid
    radio: RadioParams = field(repr=False)
    energy: EnergyParams = field(repr=False)

    @property
    def U(self) -> int:
        return self.abs_init.shape[0]

    @property
    def C(self) -> int:
        return self.cbs.shape[0]

    @property
    def M_l(self) -> int:
        return self.lue.shape[1]

    @property
    def M_h(self) -> int:
        return self.hue.shape[1]

    @property
    def N(self) -> int:
        return self.time.slots

    @property
    def region_size(self) -> float:
        return self.config.region_size

    @property
    def cbs_radius(self) -> float:
        return self.config.cbs_radius

    @property
    def lue_area(self) -> tuple[float, float, float]:
        c = self.config
        return (c.lue_area_origin, 0.0, c.lue_area_size)

    def rng(self, stream: str) -> np.random.Generator:
        children = np.random.SeedSequence(self.seed).spawn(len(_STREAMS))
        return np.random.default_rng(children[_STREAMS.index(stream)])

    def dumps(self) -> str:
        return dump_scenario(self)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()[:12]


def _hue_tracks(cfg: ScenarioConfig, start: np.ndarray, rng: np.random.Generator,
                slot_length: float) -> np.ndarray:
    """Piecewise-linear drift shared by all HUEs, reflected at the region edges."""
    L = cfg.region_size
    headings = rng.uniform(0.0, 2 * np.pi, size=cfg.route_legs)
    leg_time = cfg.horizon / cfg.route_legs
    out = np.empty((cfg.slots, start.shape[0], 3))
    for n in range(cfg.slots):
        t = n * slot_length
        shift = np.zeros(2)
        for leg, th in enumerate(headings):
            dt = min(max(t - leg * leg_time, 0.0), leg_time)
            shift += cfg.hue_speed * dt * np.array([math.cos(th), math.sin(th)])
        xy = start[:, :2] + shift
        # mirror back into [0, L]
        xy = np.mod(xy, 2 * L)
        xy = np.where(xy > L, 2 * L - xy, xy)
        out[n, :, :2] = xy
        out[n, :, 2] = 0.0
    return out


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Draw a reproducible scenario; the result is a pure function of inputs."""
    bad = _config_problems(config)
    if bad:
        raise ConfigError("invalid config value(s): " + ", ".join(bad), bad)
    cfg = config
    seed = int(seed)
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    rngs = {name: np.random.default_rng(ch) for name, ch in zip(_STREAMS, children)}
    L, A, x0 = cfg.region_size, cfg.lue_area_size, cfg.lue_area_origin
    N = cfg.slots
    slot_length = cfg.horizon / N

    sat = np.array([L / 2, L / 2, cfg.sat_altitude])
    cbs = np.array([[L * (i + 0.5) / cfg.cbs_count, 0.0, cfg.cbs_height]
                    for i in range(cfg.cbs_count)])

    lue_xy = rngs["lue"].uniform(0.0, 1.0, size=(cfg.lue_count, 2)) * A
    lue_xy[:, 0] += x0
    lue = np.zeros((N, cfg.lue_count, 3))
    lue[:, :, :2] = lue_xy

    abs_init = np.zeros((cfg.abs_count, 3))
    r = rngs["abs"]
    for u in range(cfg.abs_count):
        for _ in range(10_000):
            xy = r.uniform(0.0, 1.0, size=2) * A + np.array([x0, 0.0])
            if u == 0 or np.min(np.linalg.norm(abs_init[:u, :2] - xy, axis=1)) >= cfg.safe_distance:
                break
        else:
            raise ConfigError("cannot place ABSs with the configured safe distance",
                              ["safe_distance", "lue_area_size"])
        abs_init[u] = (xy[0], xy[1], cfg.abs_altitude)

    hue_start = np.zeros((cfg.hue_count, 3))
    hue_start[:, :2] = rngs["hue"].uniform(0.0, L, size=(cfg.hue_count, 2))
    hue = _hue_tracks(cfg, hue_start, rngs["route"], slot_length)

    return Scenario(
        config=cfg,
        seed=seed,
        sat=_frozen(sat),
        cbs=_frozen(cbs),
        abs_init=_frozen(abs_init),
        lue=_frozen(lue),
        hue=_frozen(hue),
        time=TimeGrid(cfg.horizon, N, slot_length),
        radio=radio_params(cfg),
        energy=energy_params(cfg),
    )


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Issue:
    what: str
    index: tuple
    message: str


def validate_scenario(s: Scenario) -> list[Issue]:
    """Empty list iff every scenario invariant holds."""
    issues: list[Issue] = []
    groups = {"sat": s.sat.reshape(1, 3), "cbs": s.cbs, "abs": s.abs_init}
    for name, pts in groups.items():
        for i, p in enumerate(pts):
            if p[2] < 0:
                issues.append(Issue(name, (i,), f"{name} {i} violates z >= 0 (z={p[2]:g})"))
    L = s.region_size
    for name, arr in (("lue", s.lue), ("hue", s.hue)):
        for n in range(arr.shape[0]):
            for m in range(arr.shape[1]):
                x, y, z = arr[n, m]
                if z < 0:
                    issues.append(Issue(name, (n, m), f"{name} {m} violates z >= 0 at slot {n} (z={z:g})"))
                elif z != 0:
                    issues.append(Issue(name, (n, m), f"{name} {m} is not on the sea surface at slot {n}"))
                if not (0 <= x <= L and 0 <= y <= L):
                    issues.append(Issue(name, (n, m), f"{name} {m} outside region at slot {n}"))
    if s.lue.shape[0] and s.lue.size:
        x0, y0, a = s.lue_area
        xy = s.lue[0, :, :2]
        outside = np.where((xy[:, 0] < x0) | (xy[:, 0] > x0 + a) | (xy[:, 1] < y0) | (xy[:, 1] > y0 + a))[0]
        for m in outside:
            issues.append(Issue("lue", (int(m),), f"lue {m} outside coastal square"))
    tg = s.time
    if tg.slots < 2:
        issues.append(Issue("time", (), "slot count N must be >= 2"))
    if tg.slots > 0 and tg.slot_length != tg.horizon / tg.slots:
        issues.append(Issue("time", (), f"L_u = T/N violated: {tg.slot_length:g} != {tg.horizon:g}/{tg.slots}"))
    cfg = s.config
    expected = {"abs": (cfg.abs_count, s.U), "cbs": (cfg.cbs_count, s.C),
                "lue": (cfg.lue_count, s.M_l), "hue": (cfg.hue_count, s.M_h)}
    for name, (want, got) in expected.items():
        if want != got:
            issues.append(Issue(name, (), f"count mismatch for {name}: config {want}, lists {got}"))
    for name, arr in (("lue", s.lue), ("hue", s.hue)):
        if arr.shape[0] != tg.slots:
            issues.append(Issue(name, (), f"{name} positions cover {arr.shape[0]} slots, expected {tg.slots}"))
    if not s.cbs_radius > 0:
        issues.append(Issue("cbs", (), "CBS coverage radius must be positive"))
    rp = s.radio
    for key in ("bandwidth_sat", "bandwidth_cbs", "bandwidth_abs", "p_max", "rb_abs",
                "rb_sat", "rb_cbs", "p_circuit_sat", "p_circuit_cbs"):
        if not getattr(rp, key) > 0:
            issues.append(Issue("radio", (), f"{key} must be positive"))
    for name, cp in rp.classes.items():
        if cp.zeta < 1:
            issues.append(Issue("radio", (name,), f"pathloss exponent for {name} must be >= 1"))
    ep = s.energy
    if not 0 < ep.v_min < ep.v_max:
        issues.append(Issue("energy", (), "requires 0 < v_min < v_max"))
    if not 0 < ep.h_min < ep.h_max:
        issues.append(Issue("energy", (), "requires 0 < h_min < h_max"))
    if not (ep.kappa > 0 and ep.zeta > 0):
        issues.append(Issue("energy", (), "kappa and zeta must be positive"))
    return issues


# --------------------------------------------------------------- dump/reload

def _fmt(v: float) -> str:
    return repr(float(v))


def dump_scenario(s: Scenario) -> str:
    lines = ["# sasnet scenario v1", f"seed {s.seed}"]
    for k, v in s.config.to_dict().items():
        lines.append(f"config {k} {json.dumps(v)}")
    lines.append("time " + " ".join([_fmt(s.time.horizon), str(s.time.slots), _fmt(s.time.slot_length)]))
    lines.append("sat " + " ".join(map(_fmt, s.sat)))
    for i, p in enumerate(s.cbs):
        lines.append(f"cbs {i} " + " ".join(map(_fmt, p)))
    for i, p in enumerate(s.abs_init):
        lines.append(f"abs {i} " + " ".join(map(_fmt, p)))
    for tag, arr in (("lue", s.lue), ("hue", s.hue)):
        for n in range(arr.shape[0]):
            for m in range(arr.shape[1]):
                lines.append(f"{tag} {n} {m} " + " ".join(map(_fmt, arr[n, m])))
    return "\n".join(lines) + "\n"


def load_scenario(text: str) -> Scenario:
    seed = 0
    cfg_values: dict[str, Any] = {}
    time = None
    sat = None
    pts: dict[str, dict] = {"cbs": {}, "abs": {}, "lue": {}, "hue": {}}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tag, _, rest = line.partition(" ")
        if tag == "seed":
            seed = int(rest)
        elif tag == "config":
            key, _, val = rest.partition(" ")
            cfg_values[key] = json.loads(val)
        elif tag == "time":
            h, n, l = rest.split()
            time = TimeGrid(float(h), int(n), float(l))
        elif tag == "sat":
            sat = [float(v) for v in rest.split()]
        elif tag in ("cbs", "abs"):
            i, *xyz = rest.split()
            pts[tag][int(i)] = [float(v) for v in xyz]
        elif tag in ("lue", "hue"):
            n, m, *xyz = rest.split()
            pts[tag][(int(n), int(m))] = [float(v) for v in xyz]
        else:
            raise ValueError(f"unknown scenario line: {raw!r}")
    cfg = ScenarioConfig(**{k: _coerce(k, v) for k, v in cfg_values.items()})
    if time is None or sat is None:
        raise ValueError("scenario text lacks time or satellite lines")

    def grid(tag: str, count: int) -> np.ndarray:
        out = np.zeros((time.slots, count, 3))
        for (n, m), xyz in pts[tag].items():
            out[n, m] = xyz
        return out

    return Scenario(
        config=cfg,
        seed=seed,
        sat=_frozen(sat),
        cbs=_frozen([pts["cbs"][i] for i in sorted(pts["cbs"])]).reshape(-1, 3),
        abs_init=_frozen([pts["abs"][i] for i in sorted(pts["abs"])]).reshape(-1, 3),
        lue=_frozen(grid("lue", cfg.lue_count)),
        hue=_frozen(grid("hue", cfg.hue_count)),
        time=time,
        radio=radio_params(cfg),
        energy=energy_params(cfg),
    )


def with_changes(s: Scenario, **changes: Any) -> Scenario:
    """Copy of ``s`` with some fields replaced (for tests and what-if runs)."""
    arrays = {k: _frozen(v) for k, v in changes.items()
              if k in ("sat", "cbs", "abs_init", "lue", "hue")}
    rest = {k: v for k, v in changes.items() if k not in arrays}
    return dataclasses.replace(s, **arrays, **rest)
