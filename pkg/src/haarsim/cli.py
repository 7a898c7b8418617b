"""Command-line interface: one subcommand per experiment kind.

Exit codes: 0 success, 2 configuration error, 3 I/O error. The CLI prints a
human-readable summary (KS statistics come with their 1.36/sqrt(N) reference
line); pass/fail judgments live in the test suite, not here.
"""

from __future__ import annotations

import argparse
import sys

from haarsim import __version__, backend_name
from haarsim.errors import ConfigError, HaarsimError
from haarsim.experiments import KINDS, ExperimentConfig, emit, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarsim",
        description="Monte Carlo experiments on Haar-orthogonal matrix blocks",
    )
    parser.add_argument("--version", action="version", version=f"haarsim {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="|".join(KINDS))
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run the {kind} experiment")
        sp.add_argument("--n", action="append", type=int, default=None, metavar="N",
                        help="ambient dimension (repeatable for a grid)")
        sp.add_argument("--p", type=int, default=None, help="block rows")
        sp.add_argument("--q", type=int, default=None, help="block columns")
        sp.add_argument("--x", type=float, default=None, help="row scale: p = floor(x sqrt(n))")
        sp.add_argument("--y", type=float, default=None, help="column scale: q = floor(y sqrt(n))")
        sp.add_argument("--alpha", action="append", type=float, default=None,
                        metavar="A", help="column-count scale (repeatable for a grid)")
        sp.add_argument("--reps", type=int, default=100, help="replicates per cell")
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--workers", type=int, default=1, help="process count")
        sp.add_argument("--out", type=str, default=None, help="output file path")
        sp.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        kind=args.kind,
        n_grid=tuple(args.n) if args.n else (),
        p=args.p,
        q=args.q,
        x=args.x,
        y=args.y,
        alpha_grid=tuple(args.alpha) if args.alpha else (),
        replicates=args.reps,
        master_seed=args.seed,
        workers=args.workers,
        out=args.out,
        fmt=args.fmt,
    )


def _print_summary(kind: str, summary: dict) -> None:
    print(f"[haarsim {__version__} | backend={backend_name()}] {kind} done "
          f"in {summary.get('wall_clock_s', 0.0):.2f}s")
    for key, val in summary.items():
        if key == "wall_clock_s":
            continue
        if key == "cells" and isinstance(val, dict):
            for cell, stats in val.items():
                print(f"  {cell}: {stats}")
        else:
            print(f"  {key}: {val}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        run = run_experiment(cfg)
    except HaarsimError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _print_summary(cfg.kind, run.summary)
    if cfg.out is not None:
        try:
            emit(run, cfg.fmt, cfg.out)
        except OSError as exc:
            print(f"i/o error writing {cfg.out!r}: {exc}", file=sys.stderr)
            return 3
        print(f"  wrote {cfg.fmt} -> {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
