"""Desk-scale self-checks: invariants and oracle cross-validation.

Used by the CLI `check` verb; the pytest suite covers the same ground (and
more) at full scale.
"""

from __future__ import annotations

import numpy as np

from .gradient import MethodSpec, direction, exact_gradient_augmented, exact_gradient_fd
from .linalg import IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z, commutator, expm_propagator, kron
from .model import build_two_spin_problem, cnot_target, zero_field
from .propagation import objective, propagate

__all__ = ["run_checks"]


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _paper_problem(horizon: float, n_intervals: int):
    return build_two_spin_problem(20, 30, 110, 120, 130, horizon, n_intervals)


def run_checks(quick: bool = False, seed: int = 0):
    """Run the check battery; yields (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    results = []

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    # Pauli algebra.
    check("commutator [Sx,Sy] = 2i Sz",
          np.allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z, atol=1e-14))
    check("kron mixed product",
          np.allclose(kron(SIGMA_X, SIGMA_Y) @ kron(SIGMA_Z, SIGMA_X),
                      kron(SIGMA_X @ SIGMA_Z, SIGMA_Y @ SIGMA_X), atol=1e-12))

    # Propagator unitarity and group property.
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (a + a.conj().T) / 2
    u = expm_propagator(h, 0.7)
    check("propagator unitary",
          np.linalg.norm(u.conj().T @ u - np.eye(4)) <= 1e-10 * 2)
    check("propagator group property",
          np.allclose(expm_propagator(h, 0.7), expm_propagator(h, 0.3) @ expm_propagator(h, 0.4),
                      atol=1e-10))

    # Objective identities.
    problem = _paper_problem(5.0, 24 if quick else 60)
    u_d = cnot_target()
    cache = propagate(problem, zero_field(problem))
    fake = cache.__class__(step_props=cache.step_props,
                           prefix=np.concatenate([cache.prefix[:-1], u_d[None]]),
                           suffix=cache.suffix)
    check("J(U_D) = 0", abs(objective(problem, fake)) <= 1e-12)
    fake2 = cache.__class__(step_props=cache.step_props,
                            prefix=np.concatenate([cache.prefix[:-1], (-u_d)[None]]),
                            suffix=cache.suffix)
    check("J(-U_D) = 1", abs(objective(problem, fake2) - 1) <= 1e-12)

    # Structural identities between the update rules.
    field = rng.uniform(-1, 1, size=(problem.n_intervals, problem.n_controls))
    cache = propagate(problem, field)
    d_orig = direction(problem, field, cache, MethodSpec("original"))
    d_new0 = direction(problem, field, cache, MethodSpec("new", 0))
    d_new3 = direction(problem, field, cache, MethodSpec("new", 3))
    d_old3 = direction(problem, field, cache, MethodSpec("old", 3))
    check("new(0) = dt * original", np.array_equal(d_new0, problem.dt * d_orig))
    check("old(n) = new(n) / dt", _rel_err(d_old3, d_new3 / problem.dt) <= 1e-14)

    # Prefix/suffix consistency.
    totals = np.einsum("lij,ljk->lik", cache.suffix[:-1], cache.prefix[:-1])
    check("suffix*prefix constant",
          float(np.abs(totals - cache.total).max()) <= 1e-9)

    # Oracle agreement.
    small = _paper_problem(5.0, 16 if quick else 40)
    f_small = rng.uniform(-1, 1, size=(small.n_intervals, small.n_controls))
    c_small = propagate(small, f_small)
    d_series = direction(small, f_small, c_small, MethodSpec("new", None))
    g_fd = exact_gradient_fd(small, f_small)
    g_aug = exact_gradient_augmented(small, f_small, c_small)
    err_fd = _rel_err(d_series, g_fd)
    err_aug = _rel_err(d_series, g_aug)
    fd_tol = 1e-5 if quick else 1e-6  # coarser grid leaves more FD noise
    check("adaptive series vs finite differences", err_fd <= fd_tol, f"rel err {err_fd:.2e}")
    check("adaptive series vs augmented exponential", err_aug <= 1e-10, f"rel err {err_aug:.2e}")

    # Descent direction actually descends.
    j0 = objective(small, c_small)
    delta = 1e-4 / max(np.linalg.norm(g_aug), 1e-12)
    j1 = objective(small, propagate(small, f_small + delta * g_aug))
    check("descent step lowers J", j1 < j0, f"J {j0:.6e} -> {j1:.6e}")

    return results
