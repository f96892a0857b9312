"""Command-line entry point for rendering sweep figures."""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import KINDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dos-figures",
                                     description="Render figures from dos-lab CSV outputs")
    parser.add_argument("--kind", required=True, choices=KINDS, help="figure family to draw")
    parser.add_argument("--in", dest="in_dir", required=True, help="directory holding the CSV outputs")
    parser.add_argument("--out", required=True, help="image file to write")
    parser.add_argument("--linear-y", action="store_true",
                        help="force a linear y-axis (Schelling diagrams default to log)")
    args = parser.parse_args(argv)

    spec = FigureSpec(kind=args.kind, in_dir=args.in_dir, out_path=args.out,
                      log_y=False if args.linear_y else None)
    try:
        figure = render(spec)
        plt.close(figure)
    except (ValueError, OSError) as err:
        print(f"dos-figures: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
