"""Command line entry point: ``flowq <subcommand> --config cfg.json [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import ALGORITHMS, CheckFailure, ConfigError, load_config, run, sweep

EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_MODULE = 4

log = logging.getLogger("flowq")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowq", description="Desk-scale quantum CFD encodings and solvers.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ALGORITHMS + ("sweep",):
        p = sub.add_parser(name, help=f"run a {name} experiment from a JSON config")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir or ./flowq-out)")
        p.add_argument("--oracle-check", choices=("on", "off"), default=None,
                       help="compare against classical oracles and fail on violations")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    oracle = None if args.oracle_check is None else args.oracle_check == "on"
    try:
        config = load_config(args.config)
        if args.command != "sweep" and config.get("algorithm") != args.command:
            raise ConfigError(f"config algorithm {config.get('algorithm')!r} does not match subcommand {args.command!r}")
        out = args.out or config.get("output", {}).get("dir", "flowq-out")
        if args.command == "sweep":
            sweep(config, out, args.seed, oracle, args.jobs)
        else:
            run(config, out, args.seed, oracle)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except CheckFailure as exc:
        log.error("%s", exc)
        return EXIT_CHECK
    except (ValueError, ArithmeticError) as exc:
        log.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        return EXIT_MODULE
    log.info("wrote results to %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
