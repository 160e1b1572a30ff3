"""Command line: ``skl run | preset | list | validate``.

Exit codes
----------
0 success, 1 unexpected error, 3 schema error, 4 measure error,
5 numerical degeneration, 6 right-hand side not in range.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import platform
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import (
    EvaluationError,
    MeasureError,
    NotInRangeError,
    NumericalDegeneration,
    SchemaError,
    SklWarning,
)
from .presets import get_preset, list_presets
from .scenario import load_scenario, run_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCHEMA = 3
EXIT_MEASURE = 4
EXIT_DEGENERATE = 5
EXIT_NOT_IN_RANGE = 6


def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get("SKL_OUT") or "skl_out")


def _meta(argv, doc, seed):
    return {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "skl_version": __version__,
        "python": platform.python_version(),
        "argv": list(argv),
        "scenario": doc.get("name"),
        "seed": seed if seed is not None else doc.get("seed"),
    }


def _run(doc, args, argv) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SklWarning)
        path = run_scenario(doc, _out_root(args.out), args.seed, args.figures,
                            _meta(argv, doc, args.seed))
    for w in caught:
        if issubclass(w.category, SklWarning):
            print(f"warning: {w.message}", file=sys.stderr)
    print(path)
    return EXIT_OK


def _dispatch(args, argv) -> int:
    if args.command == "list":
        for name, desc in list_presets():
            print(f"{name}\t{desc}")
        return EXIT_OK
    if args.command == "validate":
        doc = load_scenario(args.scenario)
        print(f"{doc['name']}: valid ({doc['task']})")
        return EXIT_OK
    if args.command == "preset":
        try:
            doc = get_preset(args.name)
        except KeyError as exc:
            raise SchemaError(str(exc)) from None
        if args.show:
            print(json.dumps(doc, indent=2, sort_keys=True))
            return EXIT_OK
        return _run(doc, args, argv)
    doc = load_scenario(args.scenario)
    return _run(doc, args, argv)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skl", description="Krylov structure lab for multiplication operators")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_opts(p):
        p.add_argument("--out", help="output root (default: $SKL_OUT or ./skl_out)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--figures", action="store_true",
                       help="also render PNG figures of the report tables")

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="path to a scenario JSON document")
    add_run_opts(p_run)

    p_pre = sub.add_parser("preset", help="run a named preset")
    p_pre.add_argument("name")
    p_pre.add_argument("--show", action="store_true", help="print the preset document and exit")
    add_run_opts(p_pre)

    sub.add_parser("list", help="list presets")

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args, argv)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (MeasureError, EvaluationError) as exc:
        print(f"measure error: {exc}", file=sys.stderr)
        return EXIT_MEASURE
    except NumericalDegeneration as exc:
        print(f"numerical degeneration: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NotInRangeError as exc:
        print(f"not in range: {exc}", file=sys.stderr)
        return EXIT_NOT_IN_RANGE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
