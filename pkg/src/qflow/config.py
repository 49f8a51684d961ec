"""Experiment configuration: flat key-value files, JSON alternative, validation."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .gradient import MethodSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "config_to_text",
           "parse_method", "load_config"]


class ConfigError(ValueError):
    """Raised for unparseable or invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Problem constants, time grids, solver knobs, and the method list.

    ``horizons`` and ``grid_sizes`` may hold several values; `grid` runs all
    (T, L) combinations, `run` uses the first of each.
    """

    omega1: float = 20.0
    omega2: float = 30.0
    cx: float = 110.0
    cy: float = 120.0
    cz: float = 130.0
    horizons: tuple[float, ...] = (10.0,)
    grid_sizes: tuple[int, ...] = (300,)
    s_max: float = 5000.0
    j_stop: float = 1e-7
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    methods: tuple[MethodSpec, ...] = ()
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def validate(self):
        if not self.methods:
            raise ConfigError("config field 'methods' must list at least one method")
        if any(t <= 0 for t in self.horizons):
            raise ConfigError("config field 'T' must be positive")
        if any(l < 1 for l in self.grid_sizes):
            raise ConfigError("config field 'L' must be at least 1")
        if self.s_max <= 0:
            raise ConfigError("config field 'S' must be positive")
        if self.j_stop <= 0:
            raise ConfigError("config field 'j_stop' must be positive")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("config fields 'rel_tol'/'abs_tol' must be positive")
        if self.workers < 1:
            raise ConfigError("config field 'workers' must be at least 1")
        return self


def parse_method(text: str) -> MethodSpec:
    """Parse ``kind`` or ``kind:n_max`` (n_max an integer or ``auto``)."""
    text = text.strip()
    if ":" in text:
        kind, _, raw = text.partition(":")
        kind = kind.strip()
        raw = raw.strip()
        n_max = None if raw == "auto" else int(raw)
    else:
        kind, n_max = text, None
    try:
        return MethodSpec(kind=kind, n_max=n_max)
    except ValueError as exc:
        raise ConfigError(f"bad method {text!r}: {exc}") from exc


def method_to_text(m: MethodSpec) -> str:
    return m.label


def _parse_scalar_list(raw, cast):
    if isinstance(raw, (list, tuple)):
        return tuple(cast(v) for v in raw)
    return tuple(cast(part) for part in str(raw).split(",") if str(part).strip())


def _apply_key(cfg: ExperimentConfig, key: str, raw) -> None:
    key = key.strip()
    try:
        if key in ("omega1", "omega2", "cx", "cy", "cz"):
            setattr(cfg, key, float(raw))
        elif key == "T":
            cfg.horizons = _parse_scalar_list(raw, float)
        elif key == "L":
            cfg.grid_sizes = _parse_scalar_list(raw, int)
        elif key == "S":
            cfg.s_max = float(raw)
        elif key == "j_stop":
            cfg.j_stop = float(raw)
        elif key == "rel_tol":
            cfg.rel_tol = float(raw)
        elif key == "abs_tol":
            cfg.abs_tol = float(raw)
        elif key == "methods":
            if isinstance(raw, (list, tuple)):
                cfg.methods = tuple(parse_method(str(m)) for m in raw)
            else:
                cfg.methods = tuple(parse_method(p) for p in str(raw).split(",") if p.strip())
        elif key == "seed":
            cfg.seed = int(raw)
        elif key == "workers":
            cfg.workers = int(raw)
        elif key == "out":
            cfg.out = str(raw)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for config key {key!r}: {raw!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse a config from key-value text or a JSON object."""
    cfg = ExperimentConfig()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        for key, raw in data.items():
            _apply_key(cfg, key, raw)
        return cfg
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        _apply_key(cfg, key, raw.strip())
    return cfg


def config_to_text(cfg: ExperimentConfig) -> str:
    """Render a config back to the key-value format (parse round-trip safe)."""
    lines = [
        f"omega1 = {cfg.omega1!r}",
        f"omega2 = {cfg.omega2!r}",
        f"cx = {cfg.cx!r}",
        f"cy = {cfg.cy!r}",
        f"cz = {cfg.cz!r}",
        "T = " + ", ".join(repr(t) for t in cfg.horizons),
        "L = " + ", ".join(str(l) for l in cfg.grid_sizes),
        f"S = {cfg.s_max!r}",
        f"j_stop = {cfg.j_stop!r}",
        f"rel_tol = {cfg.rel_tol!r}",
        f"abs_tol = {cfg.abs_tol!r}",
        "methods = " + ", ".join(method_to_text(m) for m in cfg.methods),
        f"seed = {cfg.seed}",
        f"workers = {cfg.workers}",
    ]
    if cfg.out is not None:
        lines.append(f"out = {cfg.out}")
    return "\n".join(lines) + "\n"


def load_config(path: str) -> ExperimentConfig:
    """Read and parse a config file (key-value or JSON, sniffed by content)."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
