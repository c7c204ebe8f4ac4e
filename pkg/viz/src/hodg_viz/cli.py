"""Entry point with one subcommand per plot kind.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="hodg-viz", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spy", help="adjacency patterns before/after renumbering")
    p.add_argument("--before", required=True, help="MatrixMarket pattern file")
    p.add_argument("--after", required=True, help="MatrixMarket pattern file")
    p.add_argument("--out", required=True, help="output image path")

    p = sub.add_parser("roofline", help="roofline chart from a perf CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("residual", help="residual convergence curves")
    p.add_argument("--csv", action="append", required=True,
                   help="residual history CSV (repeatable)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("speedup", help="worker-scaling speedup bars")
    p.add_argument("--csv", required=True, help="timing CSV")
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    from . import plots

    try:
        if args.command == "spy":
            plots.plot_spy(args.before, args.after, args.out)
        elif args.command == "roofline":
            plots.plot_roofline(args.csv, args.out)
        elif args.command == "residual":
            plots.plot_residual(args.csv, args.out)
        else:
            plots.plot_speedup(args.csv, args.out)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
