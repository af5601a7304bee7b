"""Batch figure rendering: repfigs INPUT.csv --kind KIND -o OUTPUT."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="repfigs", description="Render catrepeater sweep CSVs to figures")
    parser.add_argument("input_csv")
    parser.add_argument("-o", "--out", required=True,
                        help="output image path (a vector/raster companion is added)")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--linear-rate", action="store_true",
                        help="linear instead of log rate axis (rate-distance only)")
    args = parser.parse_args(argv)
    spec = FigureSpec(args.input_csv, args.out, args.kind,
                      log_rate=not args.linear_rate)
    try:
        written = render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
