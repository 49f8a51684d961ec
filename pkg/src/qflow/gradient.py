"""Flow directions d(eps)/ds for the three update rules, plus exact-gradient oracles.

Method kinds:

* ``original`` — plain gradient-flow update using H_k alone.
* ``old``      — commutator-corrected series without the dt prefactor.
* ``new``      — exponential-map-derivative series carrying the dt prefactor;
                 with the series run to machine precision this is the exact
                 negated gradient of the objective.

Two independent oracles for -dJ/d(eps) are provided: central finite
differences of the objective, and the augmented block-matrix derivative of
each interval exponential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import ControlProblem
from .propagation import PropagationCache, objective, propagate

__all__ = [
    "MethodSpec",
    "ad_series",
    "direction",
    "exact_gradient_fd",
    "exact_gradient_augmented",
]

KINDS = ("original", "old", "new", "exact_fd", "exact_augmented")

# Adaptive series truncation: stop once a term's Frobenius norm drops below
# this fraction of the accumulated sum, hard-capped at ADAPTIVE_CAP orders.
ADAPTIVE_RTOL = 1e-15
ADAPTIVE_CAP = 64


@dataclass(frozen=True)
class MethodSpec:
    """Which update rule to use and where to truncate its commutator series.

    ``n_max=None`` selects adaptive truncation (terms added until they stop
    mattering, capped at 64). ``original`` and the oracles ignore ``n_max``.
    """

    kind: str
    n_max: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}, expected one of {KINDS}")
        if self.n_max is not None and self.n_max < 0:
            raise ValueError("n_max must be nonnegative")

    @property
    def label(self) -> str:
        if self.kind in ("original", "exact_fd", "exact_augmented"):
            return self.kind
        suffix = "auto" if self.n_max is None else str(self.n_max)
        return f"{self.kind}:{suffix}"


def ad_series(h: np.ndarray, hk: np.ndarray, dt: float, n_max: int | None) -> np.ndarray:
    """Series sum_n (i*dt)^n / (n+1)! * ad_h^n(hk), truncated at ``n_max``.

    Finite ``n_max`` uses the scaled recurrence
    T_0 = hk, T_n = (i*dt/(n+1)) [h, T_{n-1}], one commutator per order.
    ``n_max=None`` requests the series limit; for Hermitian ``h`` it is
    evaluated in closed form in the eigenbasis of ``h`` (stable for any
    dt*||h||), otherwise adaptively with the recurrence.
    """
    h = np.asarray(h, dtype=complex)
    hk = np.asarray(hk, dtype=complex)
    if h.shape != hk.shape or h.shape[0] != h.shape[1]:
        raise ValueError(f"ad_series needs equal square matrices, got {h.shape} and {hk.shape}")
    if n_max is None and np.abs(h - h.conj().T).max() <= 1e-12 * max(np.linalg.norm(h), 1.0):
        w, v = np.linalg.eigh((h + h.conj().T) / 2)
        return _ad_series_spectral(w[None], v[None], hk[None, None], dt)[0, 0]
    return _ad_series_stack(h[None, None], hk[None, None], dt, n_max)[0, 0]


def _ad_series_stack(h: np.ndarray, hk: np.ndarray, dt: float, n_max: int | None) -> np.ndarray:
    """Vectorized truncated series over stacked (L, M, N, N) inputs (broadcastable)."""
    adaptive = n_max is None
    cap = ADAPTIVE_CAP if adaptive else n_max
    term = np.broadcast_arrays(np.zeros_like(h), hk)[1].astype(complex)
    acc = term.copy()
    for n in range(1, cap + 1):
        term = (1j * dt / (n + 1)) * (h @ term - term @ h)
        acc = acc + term
        if adaptive and np.linalg.norm(term) <= ADAPTIVE_RTOL * np.linalg.norm(acc):
            break
    return acc


def _phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1) / z with the removable singularity handled."""
    out = np.ones_like(z)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    out = np.where(small, 1.0 + z / 2, np.expm1(zs) / zs)
    return out


def _ad_series_spectral(w: np.ndarray, v: np.ndarray, hk: np.ndarray, dt: float) -> np.ndarray:
    """Exact series limit for Hermitian generators with eigensystem (w, v).

    In the eigenbasis of h the adjoint action is diagonal with eigenvalue
    differences, so the series limit multiplies each matrix element of hk by
    phi1(i*dt*(w_i - w_j)). Shapes: w (L, N), v (L, N, N), hk (L or 1, M, N, N).
    """
    z = 1j * dt * (w[:, :, None] - w[:, None, :])  # (L, N, N)
    phi = _phi1(z)
    length, m = w.shape[0], hk.shape[1]
    n = w.shape[1]
    hk_full = np.broadcast_to(hk, (length, m, n, n))
    hk_eig = np.einsum("lji,lmjk,lkn->lmin", v.conj(), hk_full, v)
    return np.einsum("lij,lmjk,lnk->lmin", v, phi[:, None] * hk_eig, v.conj())


def direction(
    problem: ControlProblem,
    field_values: np.ndarray,
    cache: PropagationCache,
    method: MethodSpec,
) -> np.ndarray:
    """Flow direction d(eps[l,k])/ds for every interval and control.

    For interval l the relevant sandwich is
    U_D* U(T, t_{l-1}) A_{lk} U(t_{l-1}, 0) with A_{lk} the (possibly
    truncated) series of the interval Hamiltonian acting on H_k; ``original``
    takes A_{lk} = H_k. The ``new`` rule carries an extra factor dt.
    """
    values = problem.check_field(field_values)
    if method.kind == "exact_fd":
        return exact_gradient_fd(problem, values)
    if method.kind == "exact_augmented":
        return exact_gradient_augmented(problem, values, cache)

    n = problem.n_levels
    dt = problem.dt
    hks = np.stack(problem.controls_h)  # (M, N, N)

    if method.kind == "original":
        a = np.broadcast_to(hks[None], (problem.n_intervals,) + hks.shape)
    elif method.n_max is None:
        h = problem.interval_hamiltonians(values)  # (L, N, N)
        w, v = np.linalg.eigh(h)
        a = _ad_series_spectral(w, v, hks[None], dt)
    else:
        h = problem.interval_hamiltonians(values)  # (L, N, N)
        a = _ad_series_stack(h[:, None], hks[None, :], dt, method.n_max)

    # Tr(U_D* suffix[l] A prefix[l]) = Tr(B_l A) with B_l cyclically rotated.
    b = np.einsum("lij,jk,lkm->lim", cache.prefix[:-1], problem.target.conj().T, cache.suffix[:-1])
    traces = np.einsum("lij,lkji->lk", b, a)
    coef = dt / (2 * n) if method.kind == "new" else 1.0 / (2 * n)
    return coef * traces.imag


def exact_gradient_fd(
    problem: ControlProblem,
    field_values: np.ndarray,
    h_rel: float = 1e-6,
) -> np.ndarray:
    """-dJ/d(eps) by central finite differences of the objective.

    Deliberately naive: every perturbed objective is evaluated with a full
    fresh propagation, keeping this oracle independent of the series code.
    """
    if h_rel <= 0:
        raise ValueError("h_rel must be positive")
    values = problem.check_field(field_values)
    grad = np.zeros_like(values)
    for l in range(values.shape[0]):
        for k in range(values.shape[1]):
            step = h_rel * max(1.0, abs(values[l, k]))
            plus = values.copy()
            plus[l, k] += step
            minus = values.copy()
            minus[l, k] -= step
            j_plus = objective(problem, propagate(problem, plus))
            j_minus = objective(problem, propagate(problem, minus))
            grad[l, k] = -(j_plus - j_minus) / (2 * step)
    return grad


def exact_gradient_augmented(
    problem: ControlProblem,
    field_values: np.ndarray,
    cache: PropagationCache,
) -> np.ndarray:
    """-dJ/d(eps) to roundoff via augmented block exponentials.

    The derivative of each interval propagator with respect to one control is
    the upper-right block of exp([[-i*dt*H, -i*dt*H_k], [0, -i*dt*H]]).
    """
    values = problem.check_field(field_values)
    n = problem.n_levels
    m = problem.n_controls
    length = values.shape[0]
    dt = problem.dt
    h = problem.interval_hamiltonians(values)
    hks = np.stack(problem.controls_h)

    blocks = np.zeros((length, m, 2 * n, 2 * n), dtype=complex)
    blocks[:, :, :n, :n] = -1j * dt * h[:, None]
    blocks[:, :, n:, n:] = -1j * dt * h[:, None]
    blocks[:, :, :n, n:] = -1j * dt * hks[None]
    du = scipy.linalg.expm(blocks)[:, :, :n, n:]  # d(step prop)/d(eps)

    # -dJ/deps[l,k] = Re Tr(U_D* U(T,t_l) dU_l U(t_{l-1},0)) / (2N)
    outer = np.einsum("lij,jk,lkm->lim",
                      cache.prefix[:-1], problem.target.conj().T, cache.suffix[1:])
    return np.einsum("lij,lkji->lk", outer, du).real / (2 * n)
