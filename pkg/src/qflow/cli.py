"""Command-line interface: run a single flow, the comparison grid, or self-checks."""

from __future__ import annotations

import argparse
import os
import sys

from .checks import run_checks
from .config import ConfigError, ExperimentConfig, load_config, parse_method
from .report import (
    emit_trajectory,
    render_table,
    render_trajectory_figure,
    rows_to_csv,
    rows_to_json,
    run_grid,
    run_single,
    write_grid_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qflow",
        description="Gradient-flow search for piecewise-constant quantum gate controls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single method on one (T, L) grid")
    p_run.add_argument("--config", required=True, help="config file (key-value or JSON)")
    p_run.add_argument("--method", help="override method, e.g. new:1 or old:auto")
    p_run.add_argument("--n-max", type=int, help="series truncation override")
    p_run.add_argument("--T", type=float, help="time horizon override")
    p_run.add_argument("--L", type=int, help="number of control intervals override")
    p_run.add_argument("--S", type=float, help="flow horizon override")
    p_run.add_argument("--out", help="output directory for row, trajectory and figure")

    p_grid = sub.add_parser("grid", help="run the methods x (T, L) comparison grid")
    p_grid.add_argument("--config", required=True)
    p_grid.add_argument("--out", required=True, help="output directory for reports")
    p_grid.add_argument("--workers", type=int, help="parallel cell workers override")

    p_check = sub.add_parser("check", help="run the invariant and oracle self-checks")
    p_check.add_argument("--quick", action="store_true", help="smaller problem sizes")
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "method", None):
        config.methods = (parse_method(args.method),)
    if getattr(args, "n_max", None) is not None:
        if not config.methods:
            raise ConfigError("--n-max given but no method configured")
        m = config.methods[0]
        config.methods = (m.__class__(kind=m.kind, n_max=args.n_max),) + config.methods[1:]
    if getattr(args, "T", None) is not None:
        config.horizons = (args.T,)
    if getattr(args, "L", None) is not None:
        config.grid_sizes = (args.L,)
    if getattr(args, "S", None) is not None:
        config.s_max = args.S
    if getattr(args, "workers", None) is not None:
        config.workers = args.workers
    if getattr(args, "out", None) is not None:
        config.out = args.out
    return config


def _cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    config.validate()
    method = config.methods[0]
    row, result = run_single(config, method)
    print(render_table([row]), end="")
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        with open(os.path.join(config.out, "row.csv"), "w", encoding="utf-8") as fh:
            fh.write(rows_to_csv([row]))
        with open(os.path.join(config.out, "row.json"), "w", encoding="utf-8") as fh:
            fh.write(rows_to_json([row]))
        emit_trajectory(result, os.path.join(config.out, "trajectory.csv"))
        render_trajectory_figure(
            result,
            os.path.join(config.out, "trajectory.png"),
            title=f"{method.label}  T={row.T:g}  L={row.L}",
        )
    return EXIT_OK


def _cmd_grid(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    config.validate()
    rows = run_grid(config)
    print(render_table(rows), end="")
    write_grid_report(rows, args.out)
    return EXIT_OK


def _cmd_check(args) -> int:
    results = run_checks(quick=args.quick)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  ({detail})"
        print(line)
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "grid":
            return _cmd_grid(args)
        return _cmd_check(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
