"""Command line front end: plot --input results.csv --family ... --out fig.png"""

import argparse
import sys

from .figures import FAMILIES, FigureSpec, plot_family


def _build_parser():
    p = argparse.ArgumentParser(
        prog="plot", description="Render experiment figures from a results CSV.")
    p.add_argument("--input", required=True, help="harness results CSV")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--scheme", action="append",
                   help="scheme to include (repeatable; default: all present)")
    p.add_argument("--xlabel", help="override the x axis label")
    p.add_argument("--ylabel", help="override the y axis label")
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        input_path=args.input,
        family=args.family,
        out_path=args.out,
        schemes=tuple(args.scheme) if args.scheme else None,
        xlabel=args.xlabel,
        ylabel=args.ylabel or FigureSpec.__dataclass_fields__["ylabel"].default,
    )
    try:
        curves = plot_family(spec)
    except (OSError, ValueError) as exc:
        print(f"plot failed: {exc}", file=sys.stderr)
        return 2
    total = sum(c[0].size for c in curves.values())
    print(f"wrote {args.out} ({len(curves)} scheme(s), {total} points)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
