"""Command line: ``heraldloc run <preset> [--config FILE] [--seed N] [--realizations N] [--workers N] [--out DIR]``.

Exit codes: 0 success, 1 computation or output failure, 2 invalid configuration or usage.
"""
from __future__ import annotations

import argparse
import sys
import warnings

from ..errors import HeraldlocError
from .config import ConfigError, default_config, load_config
from .output import OutputError, emit
from .presets import PRESETS, run_preset


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heraldloc", description="Heralded-coherence localization simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a figure preset and write CSV tables plus manifest.json")
    run.add_argument("preset", choices=PRESETS)
    run.add_argument("--config", help="YAML configuration (defaults: sigma0=1 um, gamma0=1.5)")
    run.add_argument("--seed", type=int, help="master seed for the disorder ensemble")
    run.add_argument("--realizations", type=int, help="disorder realizations per curve")
    run.add_argument("--workers", type=int, help="worker processes for the ensemble")
    run.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else default_config()
        config = config.with_overrides(disorder__master_seed=args.seed, run__realizations=args.realizations,
                                       run__workers=args.workers, output__directory=args.out)
    except (ConfigError, OSError) as exc:
        print(f"heraldloc: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            results = run_preset(args.preset, config)
        written = emit(results, config.output.directory, config.output.formats)
    except (HeraldlocError, OutputError) as exc:
        print(f"heraldloc: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
