import numpy as np
import pytest

from qflow.model import build_two_spin_problem

PAPER_PARAMS = dict(omega1=20.0, omega2=30.0, cx=110.0, cy=120.0, cz=130.0)


def paper_problem(horizon: float, n_intervals: int):
    return build_two_spin_problem(horizon=horizon, n_intervals=n_intervals, **PAPER_PARAMS)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_unitary(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
