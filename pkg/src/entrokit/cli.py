"""Command-line entry point: ``entrokit run <config.json>``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 acceptance-check failure in ``--check`` mode, 5 output I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, NumericError
from .harness import check_result, load_config, run_experiment, write_artifacts

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CHECK = 4
EXIT_IO = 5


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entrokit", description="Run synthetic estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config", help="path to a JSON experiment config")
    run.add_argument("--seed-override", default=None, help="comma-separated seeds replacing the config's list")
    run.add_argument("--out", default=None, help="output directory (default: config's 'out' or '.')")
    run.add_argument("--quiet", action="store_true", help="suppress progress logging")
    run.add_argument("--check", action="store_true", help="enforce the config's acceptance thresholds")
    return parser


def _parse_seeds(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError("bad --seed-override value %r" % text) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
        seeds = _parse_seeds(args.seed_override) if args.seed_override else None
        result = run_experiment(cfg, seed_override=seeds, quiet=args.quiet)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print("numeric failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC

    out_dir = args.out or cfg.get("out", ".")
    try:
        write_artifacts(result, out_dir)
    except OSError as exc:
        print("cannot write artifacts: %s" % exc, file=sys.stderr)
        return EXIT_IO

    failures = check_result(cfg, result)
    if result["summary"]["experiment"] == "gradcheck" and failures:
        for msg in failures:
            print("check failed: %s" % msg, file=sys.stderr)
        return EXIT_CHECK
    if args.check and failures:
        for msg in failures:
            print("check failed: %s" % msg, file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
