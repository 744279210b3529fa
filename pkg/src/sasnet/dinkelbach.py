"""Dinkelbach iteration for ratio objectives R/P."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass
class DinkelbachState:
    eta: float = 0.0
    F: float = float("inf")
    iteration: int = 0
    upsilon: float = 1e-4


@dataclass
class DinkelbachResult:
    solution: Any
    eta: float
    F: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (j, eta, F)


def subtractive_objective(R: float, P: float, eta: float) -> float:
    if not P > 0:
        raise ValueError("power must be positive")
    return R - eta * P


InnerSolver = Callable[[float, Any], tuple[Any, float, float]]


def run_dinkelbach(inner: InnerSolver, eta0: float = 0.0, upsilon: float = 1e-4,
                   max_iter: int = 50, warm: Any = None) -> DinkelbachResult:
    """Maximize R/P given ``inner(eta, warm) -> (solution, R, P)``.

    ``inner`` should maximize ``R - eta * P``. If it returns a point scoring
    below the incumbent (whose value at the current eta is exactly zero), the
    incumbent is kept, so eta never decreases and the final ``F`` is >= 0.
    """
    state = DinkelbachState(eta=eta0, upsilon=upsilon)
    best = warm
    best_F_at_eta = None
    trace = []
    converged = False
    for j in range(1, max_iter + 1):
        state.iteration = j
        try:
            sol, R, P = inner(state.eta, best)
        except Exception as exc:  # keep iteration context on failure
            raise RuntimeError(f"inner solver failed at Dinkelbach iteration {j}: {exc}") from exc
        F = subtractive_objective(R, P, state.eta)
        if best is not None and best_F_at_eta is not None and F < 0:
            # the inner step got worse than the incumbent; stop on it
            sol, R, P = best, best_F_at_eta[0], best_F_at_eta[1]
            F = subtractive_objective(R, P, state.eta)
        state.F = F
        trace.append((j, state.eta, F))
        best, best_F_at_eta = sol, (R, P)
        if F <= upsilon:
            converged = True
            break
        state.eta = R / P
    return DinkelbachResult(best, state.eta, state.F, state.iteration, converged, trace)
