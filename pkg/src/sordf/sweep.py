"""Grid sweeps and deterministic CSV emission.

Every grid point is evaluated by the mode's solver; rows come out
sorted by (ds, da) with floats serialized at 12 significant digits, so
repeated runs of the same config are byte-identical regardless of the
parallelism degree (results are collected into a pre-sized buffer
indexed by grid position).

CSV columns, in order: ds, da, rate, unit, status, solver, iterations,
residual, then mode-specific extras (region for the aligned model;
d_inner, eta, gamma, ideal, naive for classification; tr_delta, tr_mdm
for the general Gaussian model).
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .classification import (
    QuadratureConfig,
    classification_baselines,
    classification_upper_bound,
)
from .config import RunConfig, SolverOverrides
from .discrete import BAConfig, ba_target
from .gaussian_closed import aligned_sordf_closed_form, scalar_sordf
from .gaussian_detmax import DetMaxConfig, detmax_sordf
from .model import RDPoint, RDSurface

__all__ = ["SweepResult", "run_sweep", "render_csv", "EXTRA_COLUMNS"]

BASE_COLUMNS = ("ds", "da", "rate", "unit", "status", "solver", "iterations",
                "residual")
EXTRA_COLUMNS = {
    "discrete": (),
    "gaussian-scalar": (),
    "gaussian-aligned": ("region",),
    "gaussian-general": ("tr_delta", "tr_mdm"),
    "classification": ("d_inner", "eta", "gamma", "ideal", "naive"),
}


@dataclass(frozen=True)
class SweepResult:
    surface: RDSurface | None  # None for explicit point lists
    rows: list[dict]
    csv_text: str
    exit_code: int  # 0 ok, 1 solver error, 2 infeasible points present


def _ba_config(ov: SolverOverrides) -> BAConfig:
    base = BAConfig()
    return BAConfig(
        max_iters=ov.max_iters or base.max_iters,
        tolerance=ov.tolerance or base.tolerance,
        target_tol=ov.target_tol or base.target_tol,
    )


def _detmax_config(ov: SolverOverrides) -> DetMaxConfig:
    base = DetMaxConfig()
    return DetMaxConfig(
        gap_tol=ov.gap_tol or base.gap_tol,
        mu=ov.mu or base.mu,
    )


def _quad_config(ov: SolverOverrides) -> QuadratureConfig:
    base = QuadratureConfig()
    return QuadratureConfig(
        panel_tol=ov.panel_tol or base.panel_tol,
        max_depth=ov.max_depth or base.max_depth,
    )


def _evaluate(mode, source, overrides: SolverOverrides, ds: float, da: float):
    """One grid point: (RDPoint in the solver's native unit, extras, solver name)."""
    if mode == "discrete":
        src, d_s, d_a = source
        point = ba_target(src, d_s, d_a, (ds, da), _ba_config(overrides))
        return point, {}, "ba-target"
    if mode == "gaussian-scalar":
        return scalar_sordf(source, ds, da), {}, "scalar-closed-form"
    if mode == "gaussian-aligned":
        point, region = aligned_sordf_closed_form(source, ds, da)
        return point, {"region": region.value if region else ""}, "aligned-closed-form"
    if mode == "gaussian-general":
        sol = detmax_sordf(source, ds, da, _detmax_config(overrides))
        meta = {
            "iterations": sol.newton_iterations,
            "residual": sol.kkt_residual if sol.status == "converged" else 0.0,
        }
        if sol.status == "infeasible":
            meta["residual"] = float("nan")
        point = RDPoint(ds, da, sol.rate, "nats", sol.status, meta)
        return point, {"tr_delta": sol.achieved_tr_delta,
                       "tr_mdm": sol.achieved_tr_mdm}, "detmax-barrier"
    if mode == "classification":
        quad = _quad_config(overrides)
        point = classification_upper_bound(source, ds, da, quad)
        ideal, naive = classification_baselines(source, da)
        extras = {
            "d_inner": point.solver_meta.get("d_inner", float("nan")),
            "eta": point.solver_meta.get("eta", float("nan")),
            "gamma": point.solver_meta.get("gamma", float("nan")),
            "ideal": ideal,
            "naive": naive,
        }
        return point, extras, "classification-upper-bound"
    raise ValueError(f"unknown mode {mode!r}")


def _evaluate_indexed(args):
    idx, mode, source, overrides, ds, da, unit = args
    try:
        point, extras, solver = _evaluate(mode, source, overrides, ds, da)
        point = point.in_unit(unit)
        row = {
            "ds": ds, "da": da, "rate": point.rate, "unit": unit,
            "status": point.status, "solver": solver,
            "iterations": int(point.solver_meta.get("iterations", 0)),
            "residual": point.solver_meta.get("residual", 0.0),
        }
        row.update(extras)
        return idx, row, point, None
    except Exception as exc:  # recorded per point; the sweep continues
        row = {
            "ds": ds, "da": da, "rate": float("nan"), "unit": unit,
            "status": "error", "solver": mode, "iterations": 0,
            "residual": float("nan"),
        }
        placeholder = RDPoint(ds, da, float("nan"), unit, "infeasible",
                              {"iterations": 0, "residual": float("nan")})
        return idx, row, placeholder, f"{type(exc).__name__}: {exc}"


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    return str(value)


def render_csv(mode: str, rows: list[dict]) -> str:
    columns = BASE_COLUMNS + EXTRA_COLUMNS[mode]
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_format(row.get(c, "")) for c in columns) + "\n")
    return buf.getvalue()


def run_sweep(cfg: RunConfig) -> SweepResult:
    """Evaluate every grid point of a run configuration and render CSV."""
    points = cfg.grid.point_list()
    tasks = [
        (i, cfg.mode, cfg.source, cfg.solver, ds, da, cfg.unit)
        for i, (ds, da) in enumerate(points)
    ]
    results: list = [None] * len(tasks)
    if cfg.parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            for idx, row, point, err in pool.map(_evaluate_indexed, tasks,
                                                 chunksize=4):
                results[idx] = (row, point, err)
    else:
        for task in tasks:
            idx, row, point, err = _evaluate_indexed(task)
            results[idx] = (row, point, err)

    rows = [r[0] for r in results]
    rd_points = [r[1] for r in results]
    errors = [r[2] for r in results if r[2] is not None]

    surface = None
    if cfg.grid.points is None:
        ds_axis, da_axis = cfg.grid.axes()
        surface = RDSurface(ds_axis, da_axis, rd_points)

    exit_code = 0
    if any(row["status"] == "infeasible" for row in rows):
        exit_code = 2
    if errors:
        exit_code = 1
    return SweepResult(
        surface=surface,
        rows=rows,
        csv_text=render_csv(cfg.mode, rows),
        exit_code=exit_code,
    )
