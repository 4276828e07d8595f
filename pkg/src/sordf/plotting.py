"""Figure rendering for sweep output.

Renders the rate surface next to the CSV when the CLI is invoked with
--plot: a filled contour map for genuine 2-D grids, or rate-vs-distortion
curves when one axis is degenerate. Classification sweeps overlay the
ideal and naive reference curves carried in the extra CSV columns.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .model import RDSurface

__all__ = ["render_figure"]


def render_figure(
    surface: RDSurface | None,
    rows: list[dict],
    mode: str,
    unit: str,
    path: str,
) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if surface is not None and len(surface.ds_axis) > 1 and len(surface.da_axis) > 1:
        grid = surface.rate_grid()
        masked = np.ma.masked_invalid(grid)
        mesh_ds, mesh_da = np.meshgrid(surface.ds_axis, surface.da_axis,
                                       indexing="ij")
        filled = ax.contourf(mesh_ds, mesh_da, masked, levels=24, cmap="viridis")
        ax.contour(mesh_ds, mesh_da, masked, levels=12, colors="white",
                   linewidths=0.5, alpha=0.6)
        fig.colorbar(filled, ax=ax, label=f"rate ({unit})")
        ax.set_xlabel("semantic distortion")
        ax.set_ylabel("appearance distortion")
    else:
        # one axis is degenerate: plot rate against the varying distortion
        varying = "da"
        if surface is not None and len(surface.da_axis) == 1:
            varying = "ds"
        xs = [row[varying] for row in rows]
        rates = [row["rate"] for row in rows]
        ax.plot(xs, rates, marker="o", ms=3, label="rate")
        if mode == "classification":
            for column, style in (("ideal", "--"), ("naive", ":")):
                if rows and column in rows[0]:
                    ax.plot(xs, [row[column] for row in rows], style, label=column)
        ax.legend()
        ax.set_xlabel(
            "appearance distortion" if varying == "da" else "semantic distortion"
        )
        ax.set_ylabel(f"rate ({unit})")
    ax.set_title(f"{mode} rate surface")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
