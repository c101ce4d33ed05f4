"""``mstab`` command line: run a sequence of solves and write CSV logs.

Exit codes: 0 all solves converged, 1 a solve hit the MV cap,
2 breakdown, 3 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, FingerprintMismatch, MatrixMarketError, RecycleFormatError, \
    StaleData
from .harness import METHODS, ExperimentConfig, run_sequence
from .recycle import FetchPolicy
from .solvers import Status

EXIT_OK, EXIT_MAXMV, EXIT_BREAKDOWN, EXIT_CONFIG = 0, 1, 2, 3


def _tridiag(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected a,b,c,N")
    try:
        return float(parts[0]), float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a,b,c,N") from None


def _fetch(text):
    try:
        return FetchPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = argparse.ArgumentParser(
        prog="mstab",
        description="Solve a sequence of linear systems A x = b with IDR(s)stab(l), "
                    "M(s,l)stab recycling, SRIDR or a baseline Krylov method.",
    )
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="Matrix Market coordinate file")
    src.add_argument("--tridiag", type=_tridiag, metavar="a,b,c,N",
                     help="builtin tridiagonal matrix (sub, diag, super, size)")
    p.add_argument("--rhs", action="append", default=None,
                   help="ones | sinewave | random:SEED | FILE (repeatable, solved in order)")
    p.add_argument("--method", choices=METHODS, default="idrstab")
    p.add_argument("-s", type=int, default=4, help="dimension of the cut-space")
    p.add_argument("--ell", type=int, default=1, help="stabilization degree")
    p.add_argument("--tol", type=float, default=1e-8, help="relative residual tolerance")
    p.add_argument("--max-mv", type=int, default=10_000)
    p.add_argument("--precond", choices=("none", "jacobi", "ilu0"), default="none")
    p.add_argument("--fetch", type=_fetch, default=FetchPolicy.manual(),
                   metavar="{cycle:K|half-tol|off}")
    p.add_argument("--recycle-in", help="read recycling data (.mrd) before the first solve")
    p.add_argument("--recycle-out", help="write the recycling data of the first solve (.mrd)")
    p.add_argument("--log", help="directory for per-solve CSV logs and summary.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--true-residual", action="store_true",
                   help="replace the recurrence residual by b - A x after every cycle")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = ExperimentConfig(
        matrix_path=args.matrix,
        tridiag=args.tridiag,
        rhs=args.rhs or ["ones"],
        method=args.method,
        s=args.s,
        ell=args.ell,
        tol=args.tol,
        max_mv=args.max_mv,
        precond=args.precond,
        fetch=args.fetch,
        recycle_in=args.recycle_in,
        recycle_out=args.recycle_out,
        log_path=args.log,
        seed=args.seed,
        true_residual=args.true_residual,
    )
    try:
        reports = run_sequence(cfg)
    except (ConfigError, MatrixMarketError, RecycleFormatError, FingerprintMismatch,
            StaleData, OSError) as exc:
        print(f"mstab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"{'rhs':>3} {'method':>8} {'s':>2} {'ell':>3} {'h_mv':>6} {'h_rd':>6} "
          f"{'cycles':>6} {'status':>9} {'true_relres':>11}")
    for i, r in enumerate(reports, start=1):
        print(f"{i:>3} {r.method:>8} {r.s:>2} {r.ell:>3} {r.h_mv:>6} {r.h_rd:>6} "
              f"{r.cycles:>6} {r.status.value:>9} {r.true_relres:>11.3e}")
    if any(r.status is Status.BREAKDOWN for r in reports):
        return EXIT_BREAKDOWN
    if not all(r.converged for r in reports):
        return EXIT_MAXMV
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
