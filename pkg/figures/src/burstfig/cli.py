"""Render figures from simulation CSV files.

Either point at a recipe document (--recipe) or give the fields as flags.
Exit codes: 0 rendered, 1 empty input (skipped with a warning), 2 recipe or
schema error.
"""

from __future__ import annotations

import argparse
import sys

from .reader import SchemaError
from .render import KINDS, EmptyInputError, FigureRecipe, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="burstfig", description="Figure rendering for burstnet data files")
    parser.add_argument("--recipe", help="JSON recipe path")
    parser.add_argument("--kind", choices=KINDS)
    parser.add_argument("--inputs", nargs="+", help="input files or glob patterns")
    parser.add_argument("--output", help="image path to write")
    parser.add_argument("--option", action="append", default=[],
                        metavar="KEY=VALUE", help="extra recipe option")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.recipe:
            recipe = FigureRecipe.load(args.recipe)
        else:
            if not (args.kind and args.inputs and args.output):
                print("either --recipe or all of --kind/--inputs/--output "
                      "are required", file=sys.stderr)
                return 2
            options = {}
            for item in args.option:
                key, _, value = item.partition("=")
                try:
                    options[key] = float(value)
                except ValueError:
                    options[key] = value
            recipe = FigureRecipe(kind=args.kind, inputs=args.inputs,
                                  output=args.output, options=options)
        out = render(recipe)
    except EmptyInputError as exc:
        print(f"warning: {exc}; skipping", file=sys.stderr)
        return 1
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
