"""First-order lower bounds used to convexify the ABS subproblem.

Both bounds linearize a convex function of a squared distance, so they sit
below the exact value everywhere and touch it at the expansion point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOG2E = 1.0 / np.log(2.0)


@dataclass(frozen=True, eq=False)
class ExpansionPoint:
    """ABS deployment ``[U, N, 3]`` around which the bounds are taken."""

    deploy: np.ndarray


def _sqdist(a, b):
    return np.sum((np.asarray(a, float) - np.asarray(b, float)) ** 2, axis=-1)


def rate_lb_normalized(p, D, D_loc, c):
    """Rate bound per unit bandwidth from squared distances.

    ``c`` is gain-at-unit-distance over interference plus noise, so the SNR
    at squared distance ``D`` is ``p * c / D``.
    """
    a = np.asarray(p, float) * c
    return np.log2(1 + a / D_loc) - a * (D - D_loc) * LOG2E / (D_loc * (a + D_loc))


def rate_lb_grad_p(p, D, D_loc, c):
    a = np.asarray(p, float) * c
    return c * (a + 2 * D_loc - D) * LOG2E / (a + D_loc) ** 2


def rate_lb_hess_p(p, D, D_loc, c):
    a = np.asarray(p, float) * c
    return c * c * (-a - 3 * D_loc + 2 * D) * LOG2E / (a + D_loc) ** 3


def rate_lb_grad_D(p, D_loc, c):
    """Derivative of the bound with respect to the squared distance (constant)."""
    a = np.asarray(p, float) * c
    return -a * LOG2E / (D_loc * (a + D_loc))


def rate_lower_bound(p, d_u, d_ml, d_local, omega, sigma2, B, g0):
    """Lower bound on the ABS-LUE rate (bit/s) around ``d_local``."""
    D = _sqdist(d_u, d_ml)
    D_loc = _sqdist(d_local, d_ml)
    if np.any(D <= 0) or np.any(D_loc <= 0):
        raise ZeroDivisionError("ABS and LUE positions coincide")
    c = g0 / (np.asarray(omega, float) + sigma2)
    out = B * rate_lb_normalized(p, D, D_loc, c)
    return out if np.ndim(out) else float(out)


def exact_rate_sq(p, D, c):
    """Exact rate per unit bandwidth at squared distance ``D``."""
    return np.log2(1 + np.asarray(p, float) * c / D)


def distance_linearization(d_i, d_j, d_i_local, d_j_local):
    """Tangent lower bound of ``||d_i - d_j||^2`` around the local points."""
    delta0 = np.asarray(d_i_local, float) - np.asarray(d_j_local, float)
    delta = np.asarray(d_i, float) - np.asarray(d_j, float)
    out = -np.sum(delta0**2, axis=-1) + 2 * np.sum(delta0 * delta, axis=-1)
    return out if np.ndim(out) else float(out)
