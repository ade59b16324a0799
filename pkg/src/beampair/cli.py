"""Batch entry point: run experiment configs, validate them, list families."""

import argparse
import sys
from dataclasses import replace

from .experiments import (EXPERIMENTS, ConfigError, IoError, ParseError,
                          load_config, run_experiment, validate_config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beampair",
        description="Beam-pair angle estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", nargs="?", default=None,
                       help="config file (key=value lines); defaults when omitted")
    run_p.add_argument("--experiment", default=None, choices=EXPERIMENTS,
                       help="override the experiment family")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--trials", type=int, default=None)
    run_p.add_argument("--out-dir", default=".")
    run_p.add_argument("--no-plots", action="store_true")

    val_p = sub.add_parser("validate", help="parse a config and report problems")
    val_p.add_argument("config")

    sub.add_parser("list-experiments", help="print the known experiment ids")
    return parser


def _load(args) -> "ExperimentConfig":
    if args.config is None:
        cfg = validate_config("")
    else:
        cfg = load_config(args.config)
    overrides = {}
    if getattr(args, "experiment", None) is not None:
        overrides["experiment"] = args.experiment
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.no_plots:
        overrides["plots"] = False
    return replace(cfg, **overrides) if overrides else cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0
    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except (ParseError, ConfigError, OSError) as exc:
            print(f"invalid config: {exc}", file=sys.stderr)
            return 1
        print(f"ok: experiment={cfg.experiment} trials={cfg.trials} "
              f"seed={cfg.seed} snr_db={list(cfg.snr_db)}")
        return 0
    # run
    try:
        cfg = _load(args)
    except (ParseError, ConfigError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 1
    try:
        result = run_experiment(cfg, out_dir=args.out_dir)
    except (ConfigError, IoError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    for path in result["files"]:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
