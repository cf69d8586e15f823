"""Command line for rendering report figures from simulator CSVs."""

from __future__ import annotations

import argparse
import json
import sys

from figgen import __version__
from figgen.render import FigureSpec, render, render_report_dir
from figgen.schema import KINDS, SchemaError

_SPEC_KEYS = {"csv", "kind", "out", "plateau", "unit_guide", "reference"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figgen",
        description="Draw the report figures (thresholds, rate, feedback, "
        "clustering) from simulator sweep CSVs.",
    )
    parser.add_argument("--version", action="version", version="figgen " + __version__)
    parser.add_argument("--spec", help="JSON file with csv/kind/out and toggles")
    parser.add_argument("--csv", help="input CSV path")
    parser.add_argument("--kind", choices=list(KINDS), help="figure kind")
    parser.add_argument("--out", help="output image path (PNG)")
    parser.add_argument(
        "--report-dir", help="render every known report CSV found in a directory"
    )
    parser.add_argument("--no-plateau", action="store_true",
                        help="feedback: skip the large-K limit lines")
    parser.add_argument("--no-unit-guide", action="store_true",
                        help="thresholds: skip the beta = 1 line")
    parser.add_argument("--no-reference", action="store_true",
                        help="rate: skip the trend curves")
    return parser


def spec_from_args(args) -> FigureSpec:
    if args.spec:
        with open(args.spec) as fh:
            doc = json.load(fh)
        unknown = set(doc) - _SPEC_KEYS
        if unknown:
            raise SchemaError("unknown spec keys: %s" % ", ".join(sorted(unknown)))
        missing = [k for k in ("csv", "kind", "out") if k not in doc]
        if missing:
            raise SchemaError("spec is missing keys: %s" % ", ".join(missing))
        return FigureSpec(
            csv_path=doc["csv"],
            kind=doc["kind"],
            out_path=doc["out"],
            plateau=bool(doc.get("plateau", True)),
            unit_guide=bool(doc.get("unit_guide", True)),
            reference=bool(doc.get("reference", True)),
        )
    if not (args.csv and args.kind and args.out):
        raise SchemaError("need --spec, --report-dir, or all of --csv/--kind/--out")
    return FigureSpec(
        csv_path=args.csv,
        kind=args.kind,
        out_path=args.out,
        plateau=not args.no_plateau,
        unit_guide=not args.no_unit_guide,
        reference=not args.no_reference,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.report_dir:
            paths = render_report_dir(args.report_dir)
            if not paths:
                print("error: no report CSVs found in %s" % args.report_dir,
                      file=sys.stderr)
                return 2
        else:
            paths = [render(spec_from_args(args))]
    except (SchemaError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    for path in paths:
        print("wrote %s" % path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
