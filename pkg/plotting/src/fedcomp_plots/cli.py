"""Command-line entry point: `plot --out fig.png --x totalcom --y gap label=path ...`."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .plotting import PlotSpec, SchemaError, X_CHOICES, Y_CHOICES, render


def parse_inputs(pairs: list[str]) -> list[tuple[str, str]]:
    inputs = []
    for pair in pairs:
        label, sep, path = pair.partition("=")
        if not sep or not label or not path:
            raise argparse.ArgumentTypeError(
                f"expected label=path, got {pair!r}"
            )
        inputs.append((label, path))
    return inputs


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render convergence curves from fedcomp experiment CSVs",
    )
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--x", default="totalcom", choices=X_CHOICES)
    parser.add_argument("--y", default="gap", choices=Y_CHOICES)
    parser.add_argument("--title", default=None)
    parser.add_argument("inputs", nargs="+", metavar="label=path",
                        help="labeled input CSVs")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec(inputs=parse_inputs(args.inputs), x=args.x, y=args.y,
                        out=args.out, title=args.title)
        render(spec)
    except (argparse.ArgumentTypeError, SchemaError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
