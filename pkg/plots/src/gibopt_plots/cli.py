"""Command-line entry point: gibopt-plot <kind> --in FILES --out IMAGE."""

import argparse
import sys

from .data import SchemaError
from .figures import KINDS, FigureRequest, render


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gibopt-plot",
        description="Render figures from benchmark result files.",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind to draw")
    parser.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        metavar="FILE",
        help="input CSV files (results files, or trajectory files for 'trajectory')",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--labels",
        nargs="+",
        default=None,
        metavar="LABEL",
        help="one legend label per input file (trajectory overlays)",
    )
    parser.add_argument("--title", default=None, help="figure title")
    parser.add_argument("--dpi", type=int, default=150, help="raster resolution")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        request = FigureRequest(
            kind=args.kind,
            inputs=tuple(args.inputs),
            out=args.out,
            labels=tuple(args.labels) if args.labels else None,
            title=args.title,
            dpi=args.dpi,
        )
    except ValueError as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 1
    try:
        out = render(request)
    except (SchemaError, OSError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
