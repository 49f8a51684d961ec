"""Control problem construction: Hamiltonians, target gate, time grid, fields."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, is_hermitian, kron, unitarity_defect

__all__ = ["ControlProblem", "build_two_spin_problem", "cnot_target", "zero_field"]


@dataclass(frozen=True)
class ControlProblem:
    """An N-level system with drift H_0, M control Hamiltonians and a target gate.

    The time horizon [0, T] is split into ``n_intervals`` equal subintervals of
    length dt = T / L; controls are piecewise constant on that grid.
    """

    drift: np.ndarray
    controls_h: tuple[np.ndarray, ...]
    target: np.ndarray
    horizon: float
    n_intervals: int

    def __post_init__(self):
        n = self.drift.shape[0]
        if self.drift.shape != (n, n):
            raise ValueError("drift must be square")
        if not is_hermitian(self.drift):
            raise ValueError("drift Hamiltonian must be Hermitian")
        for k, hk in enumerate(self.controls_h):
            if hk.shape != (n, n):
                raise ValueError(f"control Hamiltonian {k} has wrong shape {hk.shape}")
            if not is_hermitian(hk):
                raise ValueError(f"control Hamiltonian {k} must be Hermitian")
        if self.target.shape != (n, n):
            raise ValueError("target must match system dimension")
        if unitarity_defect(self.target) > 1e-10 * np.sqrt(n):
            raise ValueError("target must be unitary")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.n_intervals < 1:
            raise ValueError("need at least one time interval")

    @property
    def n_levels(self) -> int:
        return self.drift.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.controls_h)

    @property
    def dt(self) -> float:
        return self.horizon / self.n_intervals

    def interval_hamiltonians(self, field_values: np.ndarray) -> np.ndarray:
        """Stack of the L constant Hamiltonians H_0 + sum_k eps[l,k] H_k.

        ``field_values`` has shape (L, M); the result has shape (L, N, N) and
        is symmetrized against accumulation drift.
        """
        values = self.check_field(field_values)
        hks = np.stack(self.controls_h)
        h = self.drift[None, :, :] + np.einsum("lk,kij->lij", values, hks)
        return (h + h.conj().transpose(0, 2, 1)) / 2

    def check_field(self, field_values: np.ndarray) -> np.ndarray:
        """Validate a control field array against this problem's grid."""
        values = np.asarray(field_values, dtype=float)
        if values.shape != (self.n_intervals, self.n_controls):
            raise ValueError(
                f"field shape {values.shape} does not match "
                f"(L={self.n_intervals}, M={self.n_controls})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        return values


def cnot_target() -> np.ndarray:
    """CNOT gate with the global phase e^{i pi/4}."""
    perm = np.array(
        [[1, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0]],
        dtype=complex,
    )
    return np.exp(1j * np.pi / 4) * perm


def build_two_spin_problem(
    omega1: float,
    omega2: float,
    cx: float,
    cy: float,
    cz: float,
    horizon: float,
    n_intervals: int,
) -> ControlProblem:
    """Two coupled spin-1/2 particles with local x-axis controls, CNOT target.

    Drift: omega1*Sz(x)I + omega2*I(x)Sz + cx*Sx(x)Sx + cy*Sy(x)Sy + cz*Sz(x)Sz.
    Controls: H_1 = Sx(x)I on the first spin, H_2 = I(x)Sx on the second.
    """
    drift = (
        omega1 * kron(SIGMA_Z, IDENTITY_2)
        + omega2 * kron(IDENTITY_2, SIGMA_Z)
        + cx * kron(SIGMA_X, SIGMA_X)
        + cy * kron(SIGMA_Y, SIGMA_Y)
        + cz * kron(SIGMA_Z, SIGMA_Z)
    )
    h1 = kron(SIGMA_X, IDENTITY_2)
    h2 = kron(IDENTITY_2, SIGMA_X)
    return ControlProblem(
        drift=drift,
        controls_h=(h1, h2),
        target=cnot_target(),
        horizon=horizon,
        n_intervals=n_intervals,
    )


def zero_field(problem: ControlProblem) -> np.ndarray:
    """All-zero control field on the problem's (L, M) grid."""
    return np.zeros((problem.n_intervals, problem.n_controls))
