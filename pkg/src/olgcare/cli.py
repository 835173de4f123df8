"""``olg`` command-line entry point.

Exit codes: 0 success, 2 config error, 3 infeasible model, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .config import ConfigError, Experiment, Format, load
from .errors import InfeasibleError, NumericalError
from .experiments import RUNNERS, simulation_failed
from .output import merge_overlay, read_overlay, write

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

log = logging.getLogger("olgcare")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olg", description="Steady states, dynamics and sweeps of the parental-care OLG model."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("experiment", choices=[e.value for e in Experiment])
    parser.add_argument("--config", required=True, help="path to a key = value config file")
    parser.add_argument("--out", help="output file (default: stdout, or [output] path)")
    parser.add_argument("--format", choices=[f.value for f in Format],
                        help="output format (default: [output] format, else csv)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    experiment = Experiment(args.experiment)
    try:
        cfg = load(args.config)
        table = RUNNERS[experiment](cfg)
        if cfg.overlay is not None:
            table = merge_overlay(table, read_overlay(cfg.overlay))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    fmt = args.format or cfg.format.value
    out = args.out or cfg.out_path
    text = write(table, fmt, out)
    if out is None:
        sys.stdout.write(text)
    else:
        log.info("wrote %d rows to %s", len(table), out)
    if simulation_failed(table):
        print(f"trajectory stopped early: {table.meta.get('reason')}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
