"""Command-line harness: batch experiments from a single TOML config.

Exit codes: 0 all checks passed, 1 a check failed (report still written),
2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import default_config_path, load_config
from .errors import ConfigurationError, RelwaveError
from . import experiments

_SUBCOMMANDS = ("evolve", "stationary", "transform", "madelung",
                "trajectories", "gravity", "verify-all", "converge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relwave",
        description="relativistic wave mechanics experiment harness")
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML config file (default: shipped config)")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: from config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized property suites")
    parser.add_argument("--levels", type=int, default=None,
                        help="refinement levels (converge subcommand)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sub.add_parser(name, help=f"run the {name} experiment")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config if args.config else default_config_path())
    except (ConfigurationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    outdir = Path(args.out) if args.out else Path(cfg["run"]["out"])
    seed = args.seed if args.seed is not None else cfg.seed
    plots = cfg["run"]["plots"]

    try:
        if args.command == "evolve":
            report = experiments.run_evolve(cfg, outdir, plots)
        elif args.command == "stationary":
            report = experiments.run_stationary(cfg, outdir, plots)
        elif args.command == "transform":
            report = experiments.run_transform(cfg, outdir, plots, seed)
        elif args.command == "madelung":
            report = experiments.run_madelung(cfg, outdir, plots)
        elif args.command == "trajectories":
            report = experiments.run_trajectories(cfg, outdir, plots)
        elif args.command == "gravity":
            report = experiments.run_gravity(cfg, outdir, plots)
        elif args.command == "converge":
            report = experiments.run_converge(cfg, outdir, plots, args.levels)
        elif args.command == "verify-all":
            report = experiments.run_verify_all(cfg, outdir, seed)
        else:  # pragma: no cover - argparse guards this
            raise ConfigurationError(f"unknown subcommand {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RelwaveError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    report.write(outdir)
    print(report.to_text(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
