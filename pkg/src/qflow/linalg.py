"""Dense complex matrix primitives for small quantum control problems.

Everything here operates on plain ``numpy.ndarray`` objects with
``complex128`` dtype and row-major layout. Matrices are small (4x4 for the
two-spin benchmark), so eigendecomposition-based exponentials are both cheap
and unitary to roundoff.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY_2",
    "kron",
    "commutator",
    "hermiticity_defect",
    "is_hermitian",
    "expm_propagator",
    "re_trace_product",
    "unitarity_defect",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Relative Frobenius tolerance for the Hermiticity check.
HERMITIAN_RTOL = 1e-12


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two dense matrices."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Commutator [a, b] = ab - ba of two square matrices of equal size."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def hermiticity_defect(a: np.ndarray) -> float:
    """Max elementwise deviation of ``a`` from its conjugate transpose."""
    return float(np.abs(a - a.conj().T).max())


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """Hermiticity test relative to the Frobenius norm of ``a``."""
    scale = float(np.linalg.norm(a))
    return hermiticity_defect(a) <= rtol * max(scale, 1.0)


def expm_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """Unitary propagator exp(-i*dt*h) of a Hermitian generator ``h``.

    Uses the eigendecomposition h = V diag(w) V*, so the result is unitary to
    roundoff. ``h`` is symmetrized before decomposition to absorb accumulation
    drift; inputs failing the Hermiticity tolerance are rejected.
    """
    h = np.asarray(h, dtype=complex)
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if not is_hermitian(h):
        raise ValueError("expm_propagator requires a Hermitian generator")
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * dt * w)
    return (v * phases) @ v.conj().T


def re_trace_product(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(Re, Im) of Tr(ab) without forming the product matrix."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[1] != b.shape[0] or a.shape[0] != b.shape[1]:
        raise ValueError(f"trace product needs conformable shapes, got {a.shape} and {b.shape}")
    t = np.einsum("ij,ji->", a, b)
    return float(t.real), float(t.imag)


def unitarity_defect(u: np.ndarray) -> float:
    """Frobenius norm of u*u - I."""
    n = u.shape[0]
    return float(np.linalg.norm(u.conj().T @ u - np.eye(n)))
