import json
import os

import numpy as np
import pytest

from qflow.cli import main
from qflow.config import (
    ConfigError,
    ExperimentConfig,
    config_to_text,
    parse_config,
    parse_method,
)
from qflow.flow import FlowResult, SolverConfig, solve_flow
from qflow.gradient import MethodSpec
from qflow.model import zero_field
from qflow.report import (
    ReportRow,
    emit_trajectory,
    render_table,
    rows_from_csv,
    rows_to_csv,
    rows_to_json,
    run_grid,
    run_single,
)
from conftest import paper_problem

KEYVALUE_CONFIG = """
# paper benchmark, single cell
omega1 = 20
omega2 = 30
cx = 110
cy = 120
cz = 130
T = 10
L = 300
S = 5000          # flow horizon
j_stop = 1e-7
methods = old:1, new:1
seed = 42
"""


class TestConfigParsing:
    def test_key_value_with_comments(self):
        cfg = parse_config(KEYVALUE_CONFIG)
        assert cfg.omega1 == 20 and cfg.cz == 130
        assert cfg.horizons == (10.0,)
        assert cfg.grid_sizes == (300,)
        assert cfg.s_max == 5000
        assert cfg.methods == (MethodSpec("old", 1), MethodSpec("new", 1))
        assert cfg.seed == 42

    def test_json_alternative(self):
        text = json.dumps({
            "T": [5, 10], "L": [150, 300], "methods": ["old:1", "new:1"],
            "rel_tol": 1e-4,
        })
        cfg = parse_config(text)
        assert cfg.horizons == (5.0, 10.0)
        assert cfg.grid_sizes == (150, 300)
        assert cfg.rel_tol == 1e-4

    def test_multi_value_grid_keys(self):
        cfg = parse_config("T = 5, 10\nL = 150, 300\nmethods = new:1\n")
        assert cfg.horizons == (5.0, 10.0)
        assert cfg.grid_sizes == (150, 300)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config("bogus = 1\n")

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigError, match="'L'"):
            parse_config("L = twelve\n")

    def test_missing_equals_sign(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config("just some words\n")

    def test_empty_methods_named_in_error(self):
        cfg = parse_config("T = 10\nL = 20\n")
        with pytest.raises(ConfigError, match="methods"):
            cfg.validate()

    def test_round_trip(self):
        cfg = parse_config(KEYVALUE_CONFIG)
        again = parse_config(config_to_text(cfg))
        assert again == cfg

    def test_method_spellings(self):
        assert parse_method("original") == MethodSpec("original", None)
        assert parse_method("new:auto") == MethodSpec("new", None)
        assert parse_method(" old:3 ") == MethodSpec("old", 3)
        with pytest.raises(ConfigError):
            parse_method("fancy:2")


def _small_config(**overrides):
    base = dict(horizons=(5.0,), grid_sizes=(40,), s_max=2.0, j_stop=1e-7,
                methods=(MethodSpec("new", 1),))
    base.update(overrides)
    return ExperimentConfig(**base)


class TestReportRows:
    def test_run_single_row(self):
        row, result = run_single(_small_config(), MethodSpec("new", 1))
        assert row.method == "new" and row.n_max == "1"
        assert row.T == 5.0 and row.L == 40
        assert row.termination == "S_EXHAUSTED"
        assert row.final_s == result.final_s
        assert row.n_accepted == result.n_accepted

    def test_csv_round_trip(self):
        rows = [run_single(_small_config(), m)[0]
                for m in (MethodSpec("new", 1), MethodSpec("original"))]
        parsed = rows_from_csv(rows_to_csv(rows))
        assert parsed == rows

    def test_json_fields(self):
        row = run_single(_small_config(), MethodSpec("old", 2))[0]
        data = json.loads(rows_to_json([row]))
        assert data[0]["method"] == "old"
        assert data[0]["n_max"] == "2"
        assert data[0]["final_j"] == row.final_j

    def test_grid_row_count_and_order(self):
        cfg = _small_config(horizons=(2.0, 5.0), grid_sizes=(30,), s_max=1.0,
                            methods=(MethodSpec("new", 1), MethodSpec("old", 1)))
        rows = run_grid(cfg)
        assert len(rows) == 4
        assert [r.sort_key for r in rows] == sorted(r.sort_key for r in rows)

    def test_grid_determinism_modulo_wall_time(self):
        cfg = _small_config(s_max=1.0)
        a = run_grid(cfg)
        b = run_grid(cfg)
        strip = lambda r: (r.method, r.n_max, r.T, r.L, r.final_s, r.max_step,
                           r.final_j, r.termination, r.n_accepted, r.n_rejected)
        assert [strip(r) for r in a] == [strip(r) for r in b]

    def test_render_table_rounds(self):
        row = run_single(_small_config(), MethodSpec("new", 1))[0]
        table = render_table([row])
        assert "method" in table and "new" in table
        assert str(row.L) in table


class TestTrajectoryEmission:
    def test_stationary_flow_constant_j(self, tmp_path):
        p = paper_problem(5.0, 10)
        stationary = p.__class__(
            drift=p.drift, controls_h=tuple(np.zeros_like(h) for h in p.controls_h),
            target=p.target, horizon=p.horizon, n_intervals=p.n_intervals,
        )
        result = solve_flow(stationary, zero_field(stationary), MethodSpec("original"),
                            SolverConfig(s_max=1.0))
        path = tmp_path / "traj.csv"
        emit_trajectory(result, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "s,J,step_size"
        js = {line.split(",")[1] for line in lines[1:]}
        assert len(js) == 1

    def test_converged_run_ends_below_threshold(self, tmp_path):
        cfg = _small_config(horizons=(10.0,), grid_sizes=(150,), s_max=5000.0,
                            j_stop=1e-7, methods=(MethodSpec("old", 1),))
        _, result = run_single(cfg, MethodSpec("old", 1))
        assert result.termination == "J_THRESHOLD"
        path = tmp_path / "traj.csv"
        emit_trajectory(result, str(path))
        last = path.read_text().splitlines()[-1]
        assert float(last.split(",")[1]) < 1e-7

    def test_seventeen_digit_precision(self, tmp_path):
        _, result = run_single(_small_config(), MethodSpec("new", 1))
        path = tmp_path / "traj.csv"
        emit_trajectory(result, str(path))
        rows = path.read_text().splitlines()[1:]
        for text, (s, j, h) in zip(rows, result.trajectory):
            s_text, j_text, h_text = text.split(",")
            assert float(s_text) == s and float(j_text) == j and float(h_text) == h


class TestCliEndToEnd:
    def _write_config(self, tmp_path, text=KEYVALUE_CONFIG):
        path = tmp_path / "bench.cfg"
        path.write_text(text)
        return str(path)

    def test_run_writes_artifacts(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        out = tmp_path / "out"
        code = main(["run", "--config", cfg, "--method", "new:1",
                     "--T", "5", "--L", "40", "--S", "2", "--out", str(out)])
        assert code == 0
        assert (out / "row.csv").exists()
        assert (out / "row.json").exists()
        assert (out / "trajectory.csv").exists()
        assert (out / "trajectory.png").exists()
        assert "new" in capsys.readouterr().out

    def test_grid_writes_reports(self, tmp_path, capsys):
        cfg = self._write_config(
            tmp_path, "T = 2, 5\nL = 30\nS = 1\nmethods = new:1\n")
        out = tmp_path / "grid"
        code = main(["grid", "--config", cfg, "--out", str(out)])
        assert code == 0
        rows = rows_from_csv((out / "report.csv").read_text())
        assert len(rows) == 2
        assert (out / "report.json").exists()
        assert (out / "report.png").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, "T = 10\nL = 20\n")  # no methods
        code = main(["run", "--config", cfg])
        assert code == 2
        assert "methods" in capsys.readouterr().err

    def test_missing_config_is_io_error(self, tmp_path):
        code = main(["run", "--config", str(tmp_path / "nope.cfg")])
        assert code == 3

    def test_check_quick(self, capsys):
        code = main(["check", "--quick"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS" in out and "FAIL" not in out
