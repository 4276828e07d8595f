"""Run configuration: flat key-value text with section headers.

The format is INI-style for hand-editability; matrices are bracketed
row lists, e.g. ``joint_pmf = [[0.4, 0.1], [0.1, 0.4]]``. Unknown
sections or keys are rejected by name, as are dimension mismatches and
infeasible grid bounds, so a config that parses is ready to sweep.

Example::

    [run]
    mode = gaussian-aligned
    unit = nats

    [source]
    m = 2
    sigma_s2 = 1.0
    sigma_z2 = 1.0

    [grid]
    ds_min = 0.4
    ds_max = 2.0
    ds_steps = 10
    da_min = 0.1
    da_max = 4.0
    da_steps = 10
"""

from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .model import (
    AlignedGaussianParams,
    ClassificationParams,
    DiscreteSemanticSource,
    DistortionTable,
    GaussianSource,
)

__all__ = ["ConfigError", "GridSpec", "SolverOverrides", "RunConfig", "parse_config"]

MODES = (
    "discrete",
    "gaussian-scalar",
    "gaussian-aligned",
    "gaussian-general",
    "classification",
)

_SOURCE_KEYS = {
    "discrete": {"joint_pmf", "d_s", "d_a"},
    "gaussian-scalar": {"sigma_s", "sigma_x", "sigma_sx"},
    "gaussian-aligned": {"m", "sigma_s2", "sigma_z2"},
    "gaussian-general": {"sigma_s", "sigma_sx", "sigma_x", "h", "sigma_w"},
    "classification": {"a", "sigma2"},
}

_SOLVER_KEYS = {
    "max_iters", "tolerance", "target_tol",  # discrete Blahut-Arimoto
    "gap_tol", "mu",  # det-max barrier
    "panel_tol", "max_depth",  # classification quadrature
}

_RUN_KEYS = {"mode", "unit", "out", "parallel"}
_GRID_KEYS = {"ds_min", "ds_max", "ds_steps", "da_min", "da_max", "da_steps",
              "log_da", "points"}


class ConfigError(ValueError):
    """Raised on malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class GridSpec:
    ds_min: float = 0.0
    ds_max: float = 0.0
    ds_steps: int = 1
    da_min: float = 0.0
    da_max: float = 0.0
    da_steps: int = 1
    log_da: bool = False
    points: list[tuple[float, float]] | None = None

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        if self.points is not None:
            raise ConfigError("explicit point lists have no rectangular axes")
        ds = np.linspace(self.ds_min, self.ds_max, self.ds_steps)
        if self.log_da:
            da = np.geomspace(self.da_min, self.da_max, self.da_steps)
        else:
            da = np.linspace(self.da_min, self.da_max, self.da_steps)
        return ds, da

    def point_list(self) -> list[tuple[float, float]]:
        """Grid points ordered with d_s slow and d_a fast."""
        if self.points is not None:
            return list(self.points)
        ds, da = self.axes()
        return [(float(s), float(a)) for s in ds for a in da]


@dataclass(frozen=True)
class SolverOverrides:
    max_iters: int | None = None
    tolerance: float | None = None
    target_tol: float | None = None
    gap_tol: float | None = None
    mu: float | None = None
    panel_tol: float | None = None
    max_depth: int | None = None


@dataclass(frozen=True)
class RunConfig:
    mode: str
    source: Any
    grid: GridSpec
    unit: str = "nats"
    out: str | None = None
    parallel: int = 1
    solver: SolverOverrides = field(default_factory=SolverOverrides)


def _parse_matrix(raw: str, key: str) -> np.ndarray:
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"key '{key}': malformed matrix literal: {exc}") from exc
    arr = np.array(value, dtype=object)
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{key}': matrix entries must be numbers") from exc
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ConfigError(f"key '{key}': expected a matrix (list of rows)")
    return arr


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key '{key}': expected a number, got {raw!r}") from exc


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"key '{key}': expected an integer, got {raw!r}") from exc


def _parse_bool(raw: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key '{key}': expected a boolean, got {raw!r}")


def _build_source(mode: str, items: dict[str, str]) -> Any:
    allowed = _SOURCE_KEYS[mode]
    for key in items:
        if key not in allowed:
            raise ConfigError(f"key '{key}' is not valid for mode '{mode}'")

    def need(*keys):
        missing = [k for k in keys if k not in items]
        if missing:
            raise ConfigError(
                f"mode '{mode}' requires source key(s): {', '.join(missing)}"
            )

    try:
        if mode == "discrete":
            need("joint_pmf", "d_s", "d_a")
            src = DiscreteSemanticSource(_parse_matrix(items["joint_pmf"], "joint_pmf"))
            d_s = DistortionTable(_parse_matrix(items["d_s"], "d_s"))
            d_a = DistortionTable(_parse_matrix(items["d_a"], "d_a"))
            if d_s.source_alphabet_size != src.state_alphabet_size:
                raise ConfigError("key 'd_s': row count must match the state alphabet")
            if d_a.source_alphabet_size != src.obs_alphabet_size:
                raise ConfigError(
                    "key 'd_a': row count must match the observation alphabet"
                )
            return (src, d_s, d_a)
        if mode == "gaussian-scalar":
            need("sigma_s", "sigma_x", "sigma_sx")
            return GaussianSource(
                sigma_s=np.array([[_parse_float(items["sigma_s"], "sigma_s")]]),
                sigma_sx=np.array([[_parse_float(items["sigma_sx"], "sigma_sx")]]),
                sigma_x=np.array([[_parse_float(items["sigma_x"], "sigma_x")]]),
            )
        if mode == "gaussian-aligned":
            need("m", "sigma_s2", "sigma_z2")
            return AlignedGaussianParams(
                m=_parse_int(items["m"], "m"),
                sigma_s2=_parse_float(items["sigma_s2"], "sigma_s2"),
                sigma_z2=_parse_float(items["sigma_z2"], "sigma_z2"),
            )
        if mode == "gaussian-general":
            if "h" in items or "sigma_w" in items:
                need("h", "sigma_s", "sigma_w")
                if "sigma_x" in items or "sigma_sx" in items:
                    raise ConfigError(
                        "give either (H, sigma_s, sigma_w) or "
                        "(sigma_s, sigma_sx, sigma_x), not both"
                    )
                return GaussianSource.from_linear_model(
                    _parse_matrix(items["h"], "H"),
                    _parse_matrix(items["sigma_s"], "sigma_s"),
                    _parse_matrix(items["sigma_w"], "sigma_w"),
                )
            need("sigma_s", "sigma_sx", "sigma_x")
            return GaussianSource(
                sigma_s=_parse_matrix(items["sigma_s"], "sigma_s"),
                sigma_sx=_parse_matrix(items["sigma_sx"], "sigma_sx"),
                sigma_x=_parse_matrix(items["sigma_x"], "sigma_x"),
            )
        if mode == "classification":
            need("a", "sigma2")
            return ClassificationParams(
                A=_parse_float(items["a"], "A"),
                sigma2=_parse_float(items["sigma2"], "sigma2"),
            )
    except ConfigError:
        raise
    except ValueError as exc:
        # domain-type invariant violations surface as config errors
        raise ConfigError(f"invalid source for mode '{mode}': {exc}") from exc
    raise ConfigError(f"unknown mode '{mode}'")


def _build_grid(items: dict[str, str]) -> GridSpec:
    for key in items:
        if key not in _GRID_KEYS:
            raise ConfigError(f"key '{key}' is not a valid grid key")
    if "points" in items:
        extras = set(items) - {"points"}
        if extras:
            raise ConfigError(
                f"key '{sorted(extras)[0]}': not allowed alongside an explicit "
                "point list"
            )
        try:
            raw = ast.literal_eval(items["points"])
            points = [(float(a), float(b)) for a, b in raw]
        except (TypeError, ValueError, SyntaxError) as exc:
            raise ConfigError(f"key 'points': malformed point list: {exc}") from exc
        if not points:
            raise ConfigError("key 'points': point list is empty")
        for ds, da in points:
            if ds <= 0 or da <= 0:
                raise ConfigError("key 'points': distortions must be positive")
        return GridSpec(points=points)
    required = ("ds_min", "ds_max", "ds_steps", "da_min", "da_max", "da_steps")
    missing = [k for k in required if k not in items]
    if missing:
        raise ConfigError(f"grid requires key(s): {', '.join(missing)}")
    spec = GridSpec(
        ds_min=_parse_float(items["ds_min"], "ds_min"),
        ds_max=_parse_float(items["ds_max"], "ds_max"),
        ds_steps=_parse_int(items["ds_steps"], "ds_steps"),
        da_min=_parse_float(items["da_min"], "da_min"),
        da_max=_parse_float(items["da_max"], "da_max"),
        da_steps=_parse_int(items["da_steps"], "da_steps"),
        log_da=_parse_bool(items.get("log_da", "false"), "log_da"),
    )
    for key, lo, hi in (("ds", spec.ds_min, spec.ds_max), ("da", spec.da_min, spec.da_max)):
        if lo <= 0:
            raise ConfigError(f"key '{key}_min': grid bounds must be positive")
        if hi < lo:
            raise ConfigError(f"key '{key}_max': must be >= {key}_min")
    for key, steps in (("ds_steps", spec.ds_steps), ("da_steps", spec.da_steps)):
        if steps < 1:
            raise ConfigError(f"key '{key}': must be >= 1")
    return spec


def _build_solver(items: dict[str, str]) -> SolverOverrides:
    for key in items:
        if key not in _SOLVER_KEYS:
            raise ConfigError(f"key '{key}' is not a valid solver override")
    kwargs: dict[str, Any] = {}
    for key in ("max_iters", "max_depth"):
        if key in items:
            kwargs[key] = _parse_int(items[key], key)
    for key in ("tolerance", "target_tol", "gap_tol", "mu", "panel_tol"):
        if key in items:
            kwargs[key] = _parse_float(items[key], key)
    return SolverOverrides(**kwargs)


def parse_config(text: str, mode_override: str | None = None) -> RunConfig:
    """Parse and validate a run configuration.

    ``mode_override`` is the CLI subcommand; when both it and the config
    file give a mode they must agree.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    known_sections = {"run", "source", "grid", "solver"}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(f"unknown section '[{section}]'")

    run_items = dict(parser.items("run")) if parser.has_section("run") else {}
    for key in run_items:
        if key not in _RUN_KEYS:
            raise ConfigError(f"key '{key}' is not a valid [run] key")
    mode = run_items.get("mode")
    if mode_override is not None:
        if mode is not None and mode != mode_override:
            raise ConfigError(
                f"key 'mode': config says '{mode}' but the command line says "
                f"'{mode_override}'"
            )
        mode = mode_override
    if mode is None:
        raise ConfigError("key 'mode': missing (set it in [run] or on the CLI)")
    if mode not in MODES:
        raise ConfigError(f"key 'mode': unknown mode '{mode}'")

    unit = run_items.get("unit", "nats")
    if unit not in ("nats", "bits"):
        raise ConfigError(f"key 'unit': must be 'nats' or 'bits', got {unit!r}")
    parallel = _parse_int(run_items.get("parallel", "1"), "parallel")
    if parallel < 1:
        raise ConfigError("key 'parallel': must be >= 1")

    if not parser.has_section("source"):
        raise ConfigError("missing [source] section")
    source = _build_source(mode, dict(parser.items("source")))
    if not parser.has_section("grid"):
        raise ConfigError("missing [grid] section")
    grid = _build_grid(dict(parser.items("grid")))
    solver = _build_solver(
        dict(parser.items("solver")) if parser.has_section("solver") else {}
    )
    return RunConfig(
        mode=mode,
        source=source,
        grid=grid,
        unit=unit,
        out=run_items.get("out"),
        parallel=parallel,
        solver=solver,
    )
