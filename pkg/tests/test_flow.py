import numpy as np
import pytest

from qflow.flow import SolverConfig, integrate_ode, rk45_step, solve_flow
from qflow.gradient import MethodSpec, direction
from qflow.model import ControlProblem, zero_field
from qflow.propagation import propagate
from conftest import paper_problem


def scalar_rhs(fn):
    return lambda y: (fn(y), None)


class TestRk45Step:
    def test_zero_derivative_is_exact(self):
        f = scalar_rhs(lambda y: np.zeros_like(y))
        y = np.array([1.0, -2.0])
        k1 = f(y)[0]
        y_new, err, accepted, k_last, _ = rk45_step(f, y, k1, 0.5, 1e-3, 1e-6)
        assert accepted
        assert err == 0.0
        assert np.array_equal(y_new, y)
        assert np.array_equal(k_last, k1)

    def test_rejects_non_finite_stage(self):
        f = scalar_rhs(lambda y: y * np.inf)
        y = np.array([1.0])
        k1 = np.zeros_like(y)
        _, err, accepted, _, _ = rk45_step(f, y, k1, 0.5, 1e-3, 1e-6)
        assert not accepted
        assert err == np.inf


class TestIntegrateOde:
    def test_exponential_decay_default_tolerances(self):
        f = scalar_rhs(lambda y: -y)
        config = SolverConfig(s_max=1.0, rel_tol=1e-3, abs_tol=1e-6)
        out = integrate_ode(f, np.array([1.0]), config)
        assert out["termination"] == "S_EXHAUSTED"
        # global error tracks the requested tolerance (scipy's RK45 gives 2e-4 here)
        assert abs(out["y"][0] - np.exp(-1.0)) <= 1e-4

    def test_exponential_decay_tight_tolerances(self):
        f = scalar_rhs(lambda y: -y)
        config = SolverConfig(s_max=1.0, rel_tol=1e-9, abs_tol=1e-12)
        out = integrate_ode(f, np.array([1.0]), config)
        assert abs(out["y"][0] - np.exp(-1.0)) <= 1e-9

    def test_quadratic_blowup_underflows(self):
        # y' = y^2 from y(0)=2 blows up at s=0.5
        f = scalar_rhs(lambda y: y ** 2)
        config = SolverConfig(s_max=1.0)
        out = integrate_ode(f, np.array([2.0]), config)
        assert out["termination"] == "STEP_UNDERFLOW"
        assert out["s"] < 1.0

    def test_step_limit(self):
        f = scalar_rhs(lambda y: -y)
        config = SolverConfig(s_max=1e6, max_steps=3)
        out = integrate_ode(f, np.array([1.0]), config)
        assert out["termination"] == "STEP_LIMIT"

    def test_initial_step_override(self):
        f = scalar_rhs(lambda y: -y)
        config = SolverConfig(s_max=1.0, initial_step=0.25)
        out = integrate_ode(f, np.array([1.0]), config)
        assert out["trajectory"][0][2] == 0.25


class TestSolveFlow:
    def test_stationary_flow(self):
        # no controls coupling: direction is identically zero
        p = ControlProblem(
            drift=np.diag([1.0, -1.0]).astype(complex),
            controls_h=(np.zeros((2, 2), dtype=complex),),
            target=np.eye(2, dtype=complex),
            horizon=1.0,
            n_intervals=3,
        )
        config = SolverConfig(s_max=10.0, j_stop=1e-12)
        result = solve_flow(p, zero_field(p), MethodSpec("original"), config)
        assert result.termination == "S_EXHAUSTED"
        assert np.array_equal(result.final_field, zero_field(p))

    def test_paper_cell_converges(self):
        p = paper_problem(10.0, 300)
        config = SolverConfig(keep_trajectory=False)
        result = solve_flow(p, zero_field(p), MethodSpec("old", 1), config)
        assert result.termination == "J_THRESHOLD"
        assert result.final_j < 1e-7
        assert result.max_step <= result.final_s
        assert result.final_s <= config.s_max + 1e-9

    def test_determinism(self):
        p = paper_problem(5.0, 60)
        config = SolverConfig(s_max=50.0, j_stop=1e-5)
        r1 = solve_flow(p, zero_field(p), MethodSpec("new", 1), config)
        r2 = solve_flow(p, zero_field(p), MethodSpec("new", 1), config)
        assert np.array_equal(r1.final_field, r2.final_field)
        assert r1.final_s == r2.final_s
        assert r1.final_j == r2.final_j
        assert r1.n_accepted == r2.n_accepted
        assert r1.n_rejected == r2.n_rejected
        assert [t[:2] for t in r1.trajectory] == [t[:2] for t in r2.trajectory]

    def test_state_layout_round_trip(self, rng):
        # the ODE state is the field flattened interval-major, control-minor
        p = paper_problem(5.0, 6)
        field = rng.uniform(-1, 1, size=(6, 2))
        flat = field.ravel()
        assert flat[2] == field[1, 0]
        assert np.array_equal(flat.reshape(field.shape), field)
        cache = propagate(p, field)
        d = direction(p, field, cache, MethodSpec("new", 1))
        assert np.array_equal(d.ravel().reshape(d.shape), d)

    def test_reparametrized_direction_rescales_s(self):
        # scaling the vector field by c compresses the s axis by 1/c
        from qflow.propagation import objective
        p = paper_problem(10.0, 150)
        shape = (150, 2)

        def make_rhs(scale):
            def rhs(flat):
                values = flat.reshape(shape)
                cache = propagate(p, values)
                d = direction(p, values, cache, MethodSpec("old", 1))
                return scale * d.ravel(), objective(p, cache)
            return rhs

        config = SolverConfig(s_max=5000.0, j_stop=1e-4, rel_tol=1e-8, abs_tol=1e-10)
        base = integrate_ode(make_rhs(1.0), np.zeros(300), config, j_stop=config.j_stop)
        scaled = integrate_ode(make_rhs(4.0), np.zeros(300), config, j_stop=config.j_stop)
        assert base["termination"] == "J_THRESHOLD"
        assert scaled["termination"] == "J_THRESHOLD"
        assert scaled["s"] * 4.0 == pytest.approx(base["s"], rel=0.05)

    def test_monotone_objective_at_tight_tolerance(self):
        p = paper_problem(5.0, 60)
        config = SolverConfig(s_max=1.0, rel_tol=1e-6, abs_tol=1e-9)
        result = solve_flow(p, zero_field(p), MethodSpec("exact_augmented"), config)
        js = [j for _, j, _ in result.trajectory]
        assert len(js) > 5
        for a, b in zip(js, js[1:]):
            assert b <= a + 10 * config.rel_tol
