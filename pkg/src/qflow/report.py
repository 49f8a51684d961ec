"""Benchmark execution and reporting: rows, CSV/JSON files, tables, figures."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import ExperimentConfig, parse_method
from .flow import FlowResult, SolverConfig, solve_flow
from .gradient import MethodSpec
from .model import build_two_spin_problem, zero_field

__all__ = [
    "ReportRow",
    "run_single",
    "run_grid",
    "rows_to_csv",
    "rows_from_csv",
    "rows_to_json",
    "render_table",
    "emit_trajectory",
    "render_trajectory_figure",
    "render_grid_figure",
    "write_grid_report",
]

CSV_HEADER = [
    "method", "n_max", "T", "L", "final_s", "wall_time_sec", "max_step",
    "final_j", "termination", "n_accepted", "n_rejected",
]


@dataclass(frozen=True)
class ReportRow:
    """One benchmark cell: a method run on one (T, L) grid."""

    method: str
    n_max: str  # integer text, "auto", or "" for methods without a series
    T: float
    L: int
    final_s: float
    wall_time_sec: float
    max_step: float
    final_j: float
    termination: str
    n_accepted: int
    n_rejected: int

    @property
    def sort_key(self):
        return (self.method, self.n_max, self.T, self.L)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _n_max_text(method: MethodSpec) -> str:
    if method.kind in ("original", "exact_fd", "exact_augmented"):
        return ""
    return "auto" if method.n_max is None else str(method.n_max)


def run_single(config: ExperimentConfig, method: MethodSpec,
               horizon: float | None = None, grid_size: int | None = None,
               keep_trajectory: bool = True) -> tuple[ReportRow, FlowResult]:
    """Run one flow from a zero field and summarize it as a report row.

    A step-size underflow is recorded in the row's termination column rather
    than raised.
    """
    t = horizon if horizon is not None else config.horizons[0]
    l = grid_size if grid_size is not None else config.grid_sizes[0]
    problem = build_two_spin_problem(
        config.omega1, config.omega2, config.cx, config.cy, config.cz,
        horizon=t, n_intervals=l,
    )
    solver = SolverConfig(
        s_max=config.s_max, j_stop=config.j_stop,
        rel_tol=config.rel_tol, abs_tol=config.abs_tol,
        keep_trajectory=keep_trajectory,
    )
    result = solve_flow(problem, zero_field(problem), method, solver)
    row = ReportRow(
        method=method.kind,
        n_max=_n_max_text(method),
        T=t,
        L=l,
        final_s=result.final_s,
        wall_time_sec=result.wall_time,
        max_step=result.max_step,
        final_j=result.final_j,
        termination=result.termination,
        n_accepted=result.n_accepted,
        n_rejected=result.n_rejected,
    )
    return row, result


def _grid_cell(args):
    config, method_text, t, l = args
    row, _ = run_single(config, parse_method(method_text), horizon=t, grid_size=l,
                        keep_trajectory=False)
    return row


def run_grid(config: ExperimentConfig) -> list[ReportRow]:
    """Run every method on every (T, L) cell; rows sorted deterministically."""
    config.validate()
    cells = [
        (config, m.label, t, l)
        for m in config.methods
        for t in config.horizons
        for l in config.grid_sizes
    ]
    if config.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_grid_cell, cells))
    else:
        rows = [_grid_cell(cell) for cell in cells]
    return sorted(rows, key=lambda r: r.sort_key)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.method, r.n_max, _fmt(r.T), str(r.L), _fmt(r.final_s),
            _fmt(r.wall_time_sec), _fmt(r.max_step), _fmt(r.final_j),
            r.termination, str(r.n_accepted), str(r.n_rejected),
        ])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ReportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected report header: {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(ReportRow(
            method=rec[0], n_max=rec[1], T=float(rec[2]), L=int(rec[3]),
            final_s=float(rec[4]), wall_time_sec=float(rec[5]),
            max_step=float(rec[6]), final_j=float(rec[7]), termination=rec[8],
            n_accepted=int(rec[9]), n_rejected=int(rec[10]),
        ))
    return rows


def rows_to_json(rows: list[ReportRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def render_table(rows: list[ReportRow]) -> str:
    """Human-readable summary table, values rounded to 4 significant digits."""
    headers = ["method", "n_max", "T", "L", "final_s", "max_step", "final_j",
               "termination", "accepted", "rejected", "time_s"]
    body = [
        [r.method, r.n_max or "-", f"{r.T:.4g}", str(r.L), f"{r.final_s:.4g}",
         f"{r.max_step:.4g}", f"{r.final_j:.4g}", r.termination,
         str(r.n_accepted), str(r.n_rejected), f"{r.wall_time_sec:.4g}"]
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body]
    return "\n".join(lines) + "\n"


def emit_trajectory(result: FlowResult, path: str) -> None:
    """Write the accepted-step (s, J, step) history as CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["s", "J", "step_size"])
        for s, j, h in result.trajectory:
            writer.writerow([_fmt(s), _fmt(j), _fmt(h)])


def render_trajectory_figure(result: FlowResult, path: str, title: str = "") -> None:
    """Plot J(s) and the accepted step sizes of one flow."""
    s = [p[0] for p in result.trajectory]
    j = [p[1] for p in result.trajectory]
    h = [p[2] for p in result.trajectory]
    fig, (ax_j, ax_h) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_j.semilogy(s, [max(v, 1e-18) for v in j], lw=1.2)
    ax_j.set_ylabel("objective J")
    ax_j.grid(True, alpha=0.3)
    if title:
        ax_j.set_title(title)
    ax_h.semilogy(s, h, lw=1.0, color="tab:orange")
    ax_h.set_xlabel("flow parameter s")
    ax_h.set_ylabel("accepted step")
    ax_h.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_grid_figure(rows: list[ReportRow], path: str) -> None:
    """Grouped log-scale bars of final_s and max_step per (T, L) cell."""
    cells = sorted({(r.T, r.L) for r in rows})
    methods = sorted({(r.method, r.n_max) for r in rows})
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    width = 0.8 / max(len(methods), 1)
    for panel, attr, label in ((axes[0], "final_s", "final s"),
                               (axes[1], "max_step", "max accepted step")):
        for i, mkey in enumerate(methods):
            vals = []
            for cell in cells:
                match = [r for r in rows if (r.method, r.n_max) == mkey
                         and (r.T, r.L) == cell]
                vals.append(getattr(match[0], attr) if match else 0.0)
            xs = [c + i * width for c in range(len(cells))]
            name = mkey[0] + (f":{mkey[1]}" if mkey[1] else "")
            panel.bar(xs, vals, width=width, label=name)
        panel.set_yscale("log")
        panel.set_xticks([c + 0.4 - width / 2 for c in range(len(cells))])
        panel.set_xticklabels([f"T={t:g}\nL={l}" for t, l in cells])
        panel.set_ylabel(label)
        panel.grid(True, axis="y", alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_grid_report(rows: list[ReportRow], out_dir: str) -> None:
    """Write report.csv, report.json and the summary figure into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(rows_to_json(rows))
    render_grid_figure(rows, os.path.join(out_dir, "report.png"))
