"""Command-line experiment runner.

    timomem <experiment> --config cfg.toml --out results/ [--refine ...]
                         [--seed N] [--no-plots]

Experiments: simulate, scan, nec-check, certify, represent-check, zoo.
Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .beam import BeamParams
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config
from .dynamics import NumericalError
from .experiments import run
from .kernels import ConstructionError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="timomem",
        description="Memory-damped Timoshenko beam laboratory")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", type=Path,
                        required=name not in ("zoo",),
                        help="TOML experiment configuration")
        sp.add_argument("--out", type=Path, default=Path("."),
                        help="output directory (created if missing)")
        sp.add_argument("--refine", type=float, nargs="+", metavar="M",
                        help="override refinement multipliers")
        sp.add_argument("--seed", type=int, help="override the run seed")
        sp.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering (CSV/JSON only)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config, experiment=args.experiment)
        else:
            cfg = ExperimentConfig(experiment=args.experiment,
                                   beam=BeamParams(), kernel=None,
                                   kernel_spec={})
        if args.refine:
            cfg.refine_multipliers = list(args.refine)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.no_plots:
            cfg.plots = False
    except (ConfigError, ConstructionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(cfg, args.out)
    except (ConfigError, ConstructionError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, MemoryError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.experiment == "zoo":
        for entry in report["kernels"]:
            nec = "holds" if entry["expect_nec"] else "fails"
            print(f"{entry['name']:<20} mass-ratio condition {nec:<6} "
                  f"- {entry['comment']}")
    else:
        print(json.dumps({k: v for k, v in report.items()
                          if not isinstance(v, (list, dict))}, indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
