"""plotkit command line: render figures from trajectory CSV / equilibria JSON.

Usage: plotkit <kind> --in traj1.csv [traj2.csv ...] [--equilibria eq.json]
--out fig.svg, with <kind> one of coefficients-vs-time, plane-trajectories,
objective-vs-time.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PlotSpec, render
from .io import FormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True, metavar="TRAJ_CSV",
        help="trajectory CSV files",
    )
    parser.add_argument("--equilibria", help="equilibria JSON to overlay (circles)")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(args.kind, tuple(args.inputs), args.out, args.equilibria)
        render(spec)
    except (FormatError, ValueError, OSError) as exc:
        print(f"plotkit: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
