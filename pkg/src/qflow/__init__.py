"""Gradient-flow synthesis of piecewise-constant quantum gate controls."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .flow import FlowResult, SolverConfig, solve_flow
from .gradient import (
    MethodSpec,
    ad_series,
    direction,
    exact_gradient_augmented,
    exact_gradient_fd,
)
from .model import ControlProblem, build_two_spin_problem, cnot_target, zero_field
from .propagation import PropagationCache, objective, propagate
from .report import ReportRow, run_grid, run_single

__all__ = [
    "ConfigError",
    "ControlProblem",
    "ExperimentConfig",
    "FlowResult",
    "MethodSpec",
    "PropagationCache",
    "ReportRow",
    "SolverConfig",
    "ad_series",
    "build_two_spin_problem",
    "cnot_target",
    "direction",
    "exact_gradient_augmented",
    "exact_gradient_fd",
    "load_config",
    "objective",
    "parse_config",
    "propagate",
    "run_grid",
    "run_single",
    "solve_flow",
    "zero_field",
]

__version__ = "0.1.0"
