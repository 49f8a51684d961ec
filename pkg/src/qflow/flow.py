"""Adaptive integration of the control-field descent ODE d(eps)/ds = direction(eps).

The stepper is an explicit embedded Dormand-Prince 5(4) pair with standard
PI-free step control: per-component error scale abs_tol + rel_tol*|y|, safety
factor 0.9, step-change factor clamped to [0.2, 5]. The FSAL stage doubles as
the objective evaluation at the candidate state, so the stop test J < j_stop
costs nothing extra on accepted steps.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .gradient import MethodSpec, direction
from .model import ControlProblem
from .propagation import objective, propagate

__all__ = ["SolverConfig", "FlowResult", "rk45_step", "solve_flow", "integrate_ode"]

# Dormand-Prince 5(4) tableau.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# 5th-order weights minus the embedded 4th-order weights.
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_FACTOR_MIN = 0.2
_FACTOR_MAX = 5.0
_UNDERFLOW_FRACTION = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Flow horizon, stopping threshold, and step-control knobs."""

    s_max: float = 5000.0
    j_stop: float = 1e-7
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    max_steps: int = 10_000_000
    initial_step: float | None = None
    keep_trajectory: bool = True

    def __post_init__(self):
        if self.s_max <= 0:
            raise ValueError("s_max must be positive")
        if self.j_stop <= 0:
            raise ValueError("j_stop must be positive")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class FlowResult:
    """Outcome of one descent-flow integration."""

    final_s: float
    final_j: float
    max_step: float
    n_accepted: int
    n_rejected: int
    wall_time: float
    termination: str  # J_THRESHOLD | S_EXHAUSTED | STEP_LIMIT | STEP_UNDERFLOW
    final_field: np.ndarray
    trajectory: tuple[tuple[float, float, float], ...] = ()  # (s, J, step) per accepted step


def _error_norm(diff: np.ndarray, y_old: np.ndarray, y_new: np.ndarray,
                rel_tol: float, abs_tol: float) -> float:
    scale = abs_tol + rel_tol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((diff / scale) ** 2)))


def rk45_step(f, y, k1, h, rel_tol, abs_tol):
    """One embedded Dormand-Prince 5(4) trial step.

    ``f(y)`` must return ``(dy, aux)``; ``k1 = f(y)[0]`` is reused (FSAL).
    Returns ``(y_new, err, accepted, k_last, aux_new)`` where ``k_last`` is the
    derivative at ``y_new`` (first stage of the next step if accepted) and
    ``aux_new`` is the auxiliary value reported by ``f`` at ``y_new``. A step
    producing non-finite stage derivatives is rejected with infinite error.
    """
    k = [k1]
    for row in _DP_A[1:-1]:
        y_stage = y + h * sum(a * ki for a, ki in zip(row, k))
        dy = f(y_stage)[0]
        if not np.all(np.isfinite(dy)):
            return y, np.inf, False, k1, None
        k.append(dy)
    y_new = y + h * sum(b * ki for b, ki in zip(_DP_B5[:6], k))
    if not np.all(np.isfinite(y_new)):
        return y, np.inf, False, k1, None
    k_last, aux_new = f(y_new)
    if not np.all(np.isfinite(k_last)):
        return y, np.inf, False, k1, None
    k.append(k_last)
    diff = h * sum(e * ki for e, ki in zip(_DP_E, k))
    err = _error_norm(diff, y, y_new, rel_tol, abs_tol)
    return y_new, err, err <= 1.0, k_last, aux_new


def _initial_step(f0: np.ndarray, y0: np.ndarray, f, rel_tol: float, abs_tol: float,
                  s_max: float) -> float:
    """Standard starting-step heuristic (trial Euler step, order 5)."""
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(y1)[0]
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, s_max)


def integrate_ode(f, y0, config: SolverConfig, j_stop: float | None = None):
    """Drive the adaptive stepper from s=0 to the first stopping condition.

    ``f(y)`` returns ``(dy, aux)``; when ``j_stop`` is given, integration stops
    once the aux value of an accepted step falls below it. Returns a dict with
    the final state and step statistics.
    """
    y = np.asarray(y0, dtype=float).copy()
    s = 0.0
    k1, aux = f(y)
    if not np.all(np.isfinite(k1)):
        raise ValueError("non-finite derivative at the initial state")
    h = config.initial_step or _initial_step(k1, y, f, config.rel_tol, config.abs_tol,
                                             config.s_max)
    n_accepted = 0
    n_rejected = 0
    max_step = 0.0
    trajectory = []
    termination = "STEP_LIMIT"
    h_floor = _UNDERFLOW_FRACTION * config.s_max

    if j_stop is not None and aux is not None and aux < j_stop:
        termination = "J_THRESHOLD"
        return {
            "s": s, "y": y, "aux": aux, "max_step": 0.0,
            "n_accepted": 0, "n_rejected": 0,
            "termination": termination, "trajectory": trajectory,
        }

    while n_accepted + n_rejected < config.max_steps:
        h = min(h, config.s_max - s)
        y_new, err, accepted, k_last, aux_new = rk45_step(
            f, y, k1, h, config.rel_tol, config.abs_tol
        )
        if accepted:
            s += h
            y = y_new
            k1 = k_last
            aux = aux_new
            n_accepted += 1
            max_step = max(max_step, h)
            if config.keep_trajectory:
                trajectory.append((s, aux, h))
            if j_stop is not None and aux is not None and aux < j_stop:
                termination = "J_THRESHOLD"
                break
            if s >= config.s_max * (1 - 1e-12):
                termination = "S_EXHAUSTED"
                break
        else:
            n_rejected += 1
        if np.isfinite(err):
            factor = _SAFETY * err ** -0.2 if err > 0 else _FACTOR_MAX
            h *= min(max(factor, _FACTOR_MIN), _FACTOR_MAX)
        else:
            h *= 0.5
        if h < h_floor:
            termination = "STEP_UNDERFLOW"
            break

    return {
        "s": s,
        "y": y,
        "aux": aux,
        "max_step": max_step,
        "n_accepted": n_accepted,
        "n_rejected": n_rejected,
        "termination": termination,
        "trajectory": trajectory,
    }


def solve_flow(
    problem: ControlProblem,
    field0: np.ndarray,
    method: MethodSpec,
    config: SolverConfig,
) -> FlowResult:
    """Integrate the descent flow of the control field under ``method``.

    Stops when the objective drops below ``config.j_stop`` (J_THRESHOLD), the
    flow horizon is exhausted (S_EXHAUSTED), the step count limit is reached
    (STEP_LIMIT), or the step size underflows (STEP_UNDERFLOW).
    """
    values0 = problem.check_field(field0)
    shape = values0.shape

    def rhs(flat: np.ndarray):
        values = flat.reshape(shape)
        cache = propagate(problem, values)
        d = direction(problem, values, cache, method)
        return d.ravel(), objective(problem, cache)

    start = time.perf_counter()
    out = integrate_ode(rhs, values0.ravel(), config, j_stop=config.j_stop)
    wall = time.perf_counter() - start

    final_field = out["y"].reshape(shape)
    final_j = out["aux"]
    if final_j is None:
        final_j = objective(problem, propagate(problem, final_field))
    return FlowResult(
        final_s=out["s"],
        final_j=final_j,
        max_step=out["max_step"],
        n_accepted=out["n_accepted"],
        n_rejected=out["n_rejected"],
        wall_time=wall,
        termination=out["termination"],
        final_field=final_field,
        trajectory=tuple(out["trajectory"]),
    )
