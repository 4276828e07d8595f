"""Command-line front end.

    sordf <mode> --config <path> [--out <path>] [--unit nats|bits]
          [--validate] [--parallel N] [--plot [PATH]]

The mode subcommand selects the solver family; the config file supplies
the source, the (d_s, d_a) grid, and solver overrides. Output is CSV to
--out (or stdout), optionally followed by a rendered figure. Exit codes:
0 on full success, 2 when infeasible points were encountered (rows are
still emitted with their status), 1 on solver error or failed
validation.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import MODES, ConfigError, parse_config
from .sweep import run_sweep

VALIDATION_TOL = 1e-6  # solver jitter allowed by the monotonicity check


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sordf",
        description="Rate-distortion surfaces for state-observation sources.",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"sweep using the {mode} solver")
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--unit", choices=("nats", "bits"),
                       help="rate unit (overrides the config)")
        p.add_argument("--validate", action="store_true",
                       help="check surface monotonicity after the sweep")
        p.add_argument("--parallel", type=int, metavar="N",
                       help="evaluate up to N grid points concurrently")
        p.add_argument("--plot", nargs="?", const="", metavar="PATH",
                       help="render a figure (default: CSV path with .png)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"sordf: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text, mode_override=args.mode)
    except ConfigError as exc:
        print(f"sordf: config error: {exc}", file=sys.stderr)
        return 1
    updates = {}
    if args.unit:
        updates["unit"] = args.unit
    if args.out:
        updates["out"] = args.out
    if args.parallel:
        updates["parallel"] = args.parallel
    if updates:
        cfg = dataclasses.replace(cfg, **updates)

    result = run_sweep(cfg)

    try:
        if cfg.out:
            Path(cfg.out).write_text(result.csv_text, encoding="utf-8")
        else:
            sys.stdout.write(result.csv_text)
    except OSError as exc:
        print(f"sordf: cannot write output: {exc}", file=sys.stderr)
        return 1

    exit_code = result.exit_code
    for row in result.rows:
        if row["status"] == "error":
            print(
                f"sordf: solver error at ds={row['ds']!r} da={row['da']!r}",
                file=sys.stderr,
            )

    if args.plot is not None:
        if args.plot:
            plot_path = args.plot
        elif cfg.out:
            plot_path = str(Path(cfg.out).with_suffix(".png"))
        else:
            print("sordf: --plot needs a PATH when writing CSV to stdout",
                  file=sys.stderr)
            return 1
        from .plotting import render_figure

        try:
            render_figure(result.surface, result.rows, cfg.mode, cfg.unit, plot_path)
        except OSError as exc:
            print(f"sordf: cannot render figure: {exc}", file=sys.stderr)
            return 1

    if args.validate and result.surface is not None:
        violation = result.surface.monotonicity_violation(tol=VALIDATION_TOL)
        if violation > 0:
            print(
                f"sordf: validation failed: rate increases by {violation:.3e} "
                "along a distortion axis", file=sys.stderr,
            )
            return 1
        print("sordf: validation passed (rate nonincreasing along both axes)",
              file=sys.stderr)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
