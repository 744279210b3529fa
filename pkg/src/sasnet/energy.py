"""Fixed-wing propulsion energy and energy-efficiency accounting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import EnergyParams


@dataclass(frozen=True)
class FlightState:
    speed: float
    accel: float = 0.0
    kinetic_delta: float = 0.0


def kinetic_delta(mass: float, v_now, v_next) -> float:
    """Change in kinetic energy between two velocity vectors."""
    return 0.5 * mass * (float(np.dot(v_next, v_next)) - float(np.dot(v_now, v_now)))


def flight_energy(state: FlightState, params: EnergyParams) -> float:
    v = state.speed
    if not v > 0:
        raise ValueError("fixed-wing flight needs positive speed")
    return (params.kappa * v**3 + params.zeta / v
            + params.zeta * state.accel**2 / (params.gravity**2 * v)
            + state.kinetic_delta / params.time_step)


def cruise_energy(v, params: EnergyParams):
    v = np.asarray(v, float)
    if np.any(v <= 0):
        raise ValueError("fixed-wing flight needs positive speed")
    return params.kappa * v**3 + params.zeta / v


def cruise_speed(params: EnergyParams) -> float:
    """Speed minimizing cruise energy, clipped to the speed box."""
    v = (params.zeta / (3 * params.kappa)) ** 0.25
    return float(min(max(v, params.v_min), params.v_max))


def flight_power(E: float, L_u: float, literal: bool = False) -> float:
    """Average flight power over a slot; ``literal`` multiplies instead."""
    if not L_u > 0:
        raise ValueError("slot length must be positive")
    return E * L_u if literal else E / L_u


def segment_ee(R_total: float, P_total: float) -> float:
    """Ratio of summed rate to summed power; zero when nothing is sent."""
    if R_total == 0:
        return 0.0
    if not P_total > 0:
        raise ValueError("segment power must be positive")
    return R_total / P_total


@dataclass(frozen=True)
class EEReport:
    eta_u: float
    eta_s: float
    eta_c: float
    R_u: float = 0.0
    P_u: float = 0.0
    R_s: float = 0.0
    P_s: float = 0.0
    R_c: float = 0.0
    P_c: float = 0.0

    @property
    def eta_total(self) -> float:
        return total_ee(self)


def total_ee(report: EEReport) -> float:
    return report.eta_u + report.eta_s + report.eta_c
