"""Batch figure rendering from sweep CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import EmptySeriesError, FigureSpec, MissingColumnError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="msinject-plots",
        description="Regenerate publication-style figures from sweep CSVs",
    )
    parser.add_argument("--csv", action="append", required=True,
                        help="sweep CSV (repeatable)")
    parser.add_argument("--panel", choices=("error-and-success", "decomposition"),
                        default="error-and-success")
    parser.add_argument("--fit-a", type=float, default=None,
                        help="quadratic coefficient (p axis) overlay")
    parser.add_argument("--out", required=True)
    parser.add_argument("--format", choices=("svg", "png"), default="svg")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            csv_paths=tuple(args.csv),
            panel=args.panel,
            out=args.out,
            fmt=args.format,
            fit_a=args.fit_a,
        )
        render(spec)
    except (MissingColumnError, EmptySeriesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
