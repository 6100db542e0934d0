"""Command-line entry point: ``supercrit <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from .exponents import exponent_table
from .runner import EXIT_ERROR, EXIT_OK, EXIT_SOFT, EXIT_USAGE, PROTOCOLS
from .scenario import ScenarioError, ScenarioWarning, parse_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None,
                        help="output root (default: $SUPERCRIT_OUT or ./runs)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="supercrit",
                     description="Radial energy-supercritical wave equation laboratory.")
    sub = parser.add_subparsers(dest="command", metavar="<command>", parser_class=_Parser)
    sub.required = True
    helps = {
        "simulate": "evolve a scenario and write the diagnostics series",
        "scatter": "pullback-Cauchy scattering test",
        "stability": "perturbation ladder and log-log slope",
        "blowup": "focusing run until the amplitude threshold trips",
        "morawetz": "dispersal probe and Morawetz report",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("scenario", type=Path)
    p = sub.add_parser("exponents", parents=[common], help="print the exponent table")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    sub.add_parser("selftest", parents=[common], help="run the fast invariant suite")
    return parser


def _format_value(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.12g}"
    if isinstance(v, dict):
        return " ".join(f"{k}={_format_value(x)}" for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_format_value(x) for x in v) + ")"
    return str(v)


def _print_table(table: dict) -> None:
    width = max(len(k) for k in table)
    for key, val in table.items():
        if isinstance(val, dict):
            print(f"{key}:")
            for k, v in val.items():
                print(f"  {k:<{width}}  {_format_value(v)}")
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            print(f"{key}:")
            for item in val:
                print(f"  {_format_value(item)}")
        else:
            print(f"{key:<{width}}  {_format_value(val)}")


def _cmd_exponents(args) -> int:
    try:
        table = exponent_table(args.d, args.p)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "json":
        from .experiments import _jsonable
        print(json.dumps(_jsonable(table), indent=2))
    else:
        _print_table(table)
    return EXIT_OK


def _cmd_protocol(args) -> int:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ScenarioWarning)
            sc = parse_scenario(args.scenario)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        man = PROTOCOLS[args.command](sc, args.out)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for key, val in man.flags.items():
        if val:
            print(f"flag: {key}", file=sys.stderr)
    out = Path(args.out) if args.out else None
    print(f"{args.command}: wrote {len(man.files)} files for '{sc.run.name}'"
          f"{'' if out is None else f' under {out}'} (exit {man.exit_code})")
    return man.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "exponents":
        return _cmd_exponents(args)
    if args.command == "selftest":
        from .selftest import run_selftest
        return EXIT_OK if run_selftest() else EXIT_ERROR
    return _cmd_protocol(args)


__all__ = ["main", "build_parser", "EXIT_SOFT"]
