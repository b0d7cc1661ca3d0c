"""Command-line harness running the verification suites.

Usage:
    tractorcalc [config.json] [--suite NAME]... [--format text|json]
                [--seed N] [--points N] [--tol-scale F] [--timing]
                [--output PATH] [--list-models]

The positional argument is a JSON config document ("-" reads standard
input); without it the built-in defaults run every suite.  Exit codes:
0 all checks pass (negative controls failing loudly count as passing),
1 at least one check went bad, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from .errors import ConfigError, TractorCalcError
from .report import emit
from .suites import SUITE_NAMES, config_from_dict, list_models, run


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tractorcalc",
        description="Run curvature and tractor identity checks on "
                    "built-in or configured models.")
    parser.add_argument("config", nargs="?", default=None,
                        help="JSON config path, or - for standard input")
    parser.add_argument("--suite", action="append", choices=SUITE_NAMES,
                        help="run only this suite (repeatable)")
    parser.add_argument("--format", choices=("text", "json"),
                        default="text", help="report format")
    parser.add_argument("--seed", type=_nonnegative_int, default=None,
                        help="override the sampling seed")
    parser.add_argument("--points", type=_positive_int, default=None,
                        help="override the per-check sample count")
    parser.add_argument("--tol-scale", type=_positive_float, default=None,
                        help="multiply every tolerance (exploratory runs)")
    parser.add_argument("--timing", action="store_true",
                        help="record wall times instead of canonical zeros")
    parser.add_argument("--output", default=None,
                        help="write the report here instead of stdout")
    parser.add_argument("--list-models", action="store_true",
                        help="print the model catalog and exit")
    return parser


def _load_config(source):
    if source is None:
        return {}
    if source == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(source, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {source!r}: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"parse error at line {exc.lineno} column {exc.colno}: "
            f"{exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("parse error at line 1 column 1: "
                          "top level must be an object")
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_models:
        print(list_models())
        return 0
    try:
        cfg = config_from_dict(_load_config(args.config))
        if args.suite:
            cfg = replace(cfg, suites=tuple(dict.fromkeys(args.suite)))
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.points is not None:
            cfg = replace(cfg, points=args.points)
        if args.tol_scale is not None:
            cfg = replace(cfg, tol_scale=args.tol_scale)
        if args.timing:
            cfg = replace(cfg, timing=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        reports, code = run(cfg)
    except TractorCalcError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as handle:
                emit(reports, args.format, handle)
        except OSError as exc:
            print(f"cannot write report: {exc}", file=sys.stderr)
            return 2
    else:
        emit(reports, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
