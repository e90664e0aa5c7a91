"""Command-line entry point.

``qvmc run <config> [--seed N] [--out DIR] [--workers K]`` runs an experiment;
``qvmc validate <config>`` only parses and validates it.  Exit codes: 0 on
success, 2 on a configuration error, 3 on a runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import parse_config
from .errors import ConfigError, QvmcError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qvmc", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    val = sub.add_parser("validate", help="validate a config file")
    val.add_argument("config")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = parse_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({cfg.experiment.kind})")
            return EXIT_OK
        cfg = cfg.with_overrides(args.seed, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .experiments import run_experiment

    try:
        manifest = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QvmcError, ArithmeticError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(manifest.artifacts)} artifacts to {cfg.output_dir()}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
