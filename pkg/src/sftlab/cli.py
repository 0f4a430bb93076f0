"""Command-line entry point.

Exit status: 0 success, 2 validation error, 3 numeric non-convergence,
4 capability error (caps, non-lattice observable, non-primitive system).
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone

from . import reports
from .errors import SftLabError
from .io import load_system, loads_system


def _add_common(p: argparse.ArgumentParser, observable=True):
    p.add_argument("system", nargs="?", help="system description JSON (omit with --stdio)")
    if observable:
        p.add_argument("--observable", help="observable name from the system file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sftlab", description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=None, help="directory for report files (default: stdout)")
    parser.add_argument("--stdio", action="store_true",
                        help="read the system from stdin and write one JSON document to stdout")
    parser.add_argument("--allow-unknown", action="store_true",
                        help="accept and pass through unknown JSON fields")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker budget; results do not depend on it")
    parser.add_argument("--timestamp", action="store_true",
                        help="embed the wall-clock time in metadata (breaks byte-identity)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="Perron data, spectrum, gap, Gibbs cylinder bounds")
    _add_common(p, observable=False)
    p.add_argument("--nmax", type=int, default=12)

    sub.add_parser("demo", help="golden-mean reproduction table")

    p = sub.add_parser("variance", help="asymptotic variance by four routes")
    _add_common(p)

    p = sub.add_parser("correlations", help="exact correlation sequence")
    _add_common(p)
    p.add_argument("--nmax", type=int, default=30)

    p = sub.add_parser("clt", help="Monte Carlo CLT experiment")
    _add_common(p)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--chains", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("exactdist", help="exact law of S_n g")
    _add_common(p)
    p.add_argument("--n", type=int, default=512)

    p = sub.add_parser("ldp", help="rate function and exact tail comparison")
    _add_common(p)
    p.add_argument("--a", type=float, default=0.9)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--tmax", type=float, default=8.0)
    p.add_argument("--grid", type=int, default=129)

    p = sub.add_parser("livsic", help="coboundary obstructions and zero-variance check")
    _add_common(p)
    return parser


def _run(args, desc):
    c = args.command
    if c == "analyze":
        return reports.cmd_analyze(desc, args.nmax)
    if c == "variance":
        return reports.cmd_variance(desc, args.observable)
    if c == "correlations":
        return reports.cmd_correlations(desc, args.observable, args.nmax)
    if c == "clt":
        return reports.cmd_clt(desc, args.observable, args.n, args.chains, args.seed)
    if c == "exactdist":
        return reports.cmd_exactdist(desc, args.observable, args.n)
    if c == "ldp":
        return reports.cmd_ldp(desc, args.observable, args.a, args.eps, args.tmax, args.grid)
    if c == "livsic":
        return reports.cmd_livsic(desc, args.observable)
    raise AssertionError(c)


def main(argv=None, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    strict = not args.allow_unknown
    try:
        if args.command == "demo":
            bundle = reports.cmd_demo_golden_mean()
        else:
            if args.stdio:
                desc = loads_system(stdin.read(), strict)
            elif args.system:
                desc = load_system(args.system, strict)
            else:
                print("error: a system file is required (or use --stdio)", file=sys.stderr)
                return 2
            bundle = _run(args, desc)
    except SftLabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.timestamp:
        bundle.metadata["timestamp"] = datetime.now(timezone.utc).isoformat()
    if args.out and not args.stdio:
        os.makedirs(args.out, exist_ok=True)
        for name, text in bundle.files().items():
            with open(os.path.join(args.out, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    else:
        stdout.write(bundle.to_stdio())
    return 0
