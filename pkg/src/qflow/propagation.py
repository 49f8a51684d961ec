"""Per-interval propagators, prefix/suffix evolution products, and the objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ControlProblem

__all__ = ["PropagationCache", "propagate", "objective"]


@dataclass(frozen=True)
class PropagationCache:
    """Propagators of one piecewise-constant evolution.

    step_props[l] is the unitary of interval l; prefix[l] evolves 0 -> t_l
    (prefix[0] = I), suffix[l] evolves t_l -> T (suffix[L] = I). The total
    propagator over [0, T] is prefix[L] == suffix[0].
    """

    step_props: np.ndarray  # (L, N, N)
    prefix: np.ndarray      # (L+1, N, N)
    suffix: np.ndarray      # (L+1, N, N)

    @property
    def total(self) -> np.ndarray:
        return self.prefix[-1]


def propagate(problem: ControlProblem, field_values: np.ndarray) -> PropagationCache:
    """Compute all interval propagators and their running products.

    One batched eigendecomposition gives the L interval unitaries; the prefix
    and suffix products are then accumulated in a forward and a backward pass.
    """
    h = problem.interval_hamiltonians(field_values)
    dt = problem.dt
    n = problem.n_levels
    length = problem.n_intervals

    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * dt * w)
    steps = np.einsum("lij,lj,lkj->lik", v, phases, v.conj())

    prefix = np.empty((length + 1, n, n), dtype=complex)
    suffix = np.empty((length + 1, n, n), dtype=complex)
    prefix[0] = np.eye(n)
    for l in range(length):
        prefix[l + 1] = steps[l] @ prefix[l]
    suffix[length] = np.eye(n)
    for l in range(length - 1, -1, -1):
        suffix[l] = suffix[l + 1] @ steps[l]
    return PropagationCache(step_props=steps, prefix=prefix, suffix=suffix)


def objective(problem: ControlProblem, cache: PropagationCache) -> float:
    """Gate infidelity J = 0.5 - Re Tr(U_D* U(T,0)) / (2N), clamped at zero."""
    n = problem.n_levels
    overlap = np.einsum("ij,ij->", problem.target.conj(), cache.total)
    j = 0.5 - overlap.real / (2 * n)
    return max(float(j), 0.0)
