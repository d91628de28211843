"""Command-line entry point.

Exit status: 0 when every check passes, 1 when any check fails, 2 on usage
errors.
"""
import argparse
import sys
import time

import numpy as np

from . import checks
from .core import TaylorMatrix, load, save
from .oed import (
    OedConfig,
    gradient_analytic,
    make_problem,
    objective_dense,
    oed_gradient_forward,
    oed_gradient_reverse,
    oed_objective,
)
from .report import RunReport


def _emit(report, fmt):
    if fmt in ("human", "both"):
        print(report.human())
    if fmt in ("records", "both"):
        print(report.records())
    return 0 if report.passed else 1


def run_oed(args):
    cfg = OedConfig(n_m=args.nm, n_x=args.nx, y0=args.y0, seed=args.seed,
                    degree=args.degree, tol=args.tol)
    if args.b_file:
        b_poly = load(args.b_file)
        b = b_poly.coeffs[0]
        cfg = OedConfig(n_m=b.shape[0], n_x=b.shape[1], y0=args.y0, seed=args.seed,
                        degree=args.degree, tol=args.tol)
    else:
        b, _ = make_problem(cfg)
    if args.save_b:
        save(args.save_b, TaylorMatrix.constant(b, 1))

    report = RunReport("oed-gradient", {
        "nm": cfg.n_m, "nx": cfg.n_x, "y0": cfg.y0, "seed": cfg.seed,
        "degree": cfg.degree, "tol": cfg.tol, "mode": args.mode})
    t0 = time.perf_counter()
    phi = oed_objective(cfg, b)
    report.timings["objective"] = time.perf_counter() - t0
    report.add("Phi (QR route vs dense route)", phi, objective_dense(b, cfg.y0), 1e-10)

    analytic = gradient_analytic(b, cfg.y0)
    fwd = rev = None
    if args.mode in ("forward", "both"):
        t0 = time.perf_counter()
        fwd = oed_gradient_forward(cfg, b)
        report.timings["forward"] = time.perf_counter() - t0
        report.add("dPhi/dy forward vs analytic", fwd, analytic, cfg.tol)
    if args.mode in ("reverse", "both"):
        t0 = time.perf_counter()
        rev = oed_gradient_reverse(cfg, b)
        report.timings["reverse"] = time.perf_counter() - t0
        report.add("dPhi/dy reverse vs analytic", rev, analytic, cfg.tol)
    if fwd is not None and rev is not None:
        report.add("dPhi/dy reverse vs forward", rev, fwd, 1e-11)
    return report


def build_parser():
    parser = argparse.ArgumentParser(
        prog="utpm",
        description="Taylor-polynomial AD of QR and symmetric eigendecompositions.")
    parser.add_argument("--format", choices=("human", "records", "both"), default="both",
                        help="report style (default: both)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oed-gradient", help="gradient of the E-optimal design criterion")
    p.add_argument("--nm", type=int, default=50)
    p.add_argument("--nx", type=int, default=11)
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--mode", choices=("forward", "reverse", "both"), default="both")
    p.add_argument("--b-file", help="read B from a UTPM-TXT file (coefficient 0)")
    p.add_argument("--save-b", help="write the B actually used as UTPM-TXT")

    p = sub.add_parser("check", help="run verification suites")
    p.add_argument("--suite", choices=checks.SUITES + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sizes", type=lambda s: [t for t in s.split(",") if t],
                   help="comma-separated sizes, e.g. 6x3,4,20")

    p = sub.add_parser("dot-test", help="adjoint/tangent pairing test of one pullback")
    p.add_argument("--op", choices=checks.DOT_OPS, required=True)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)

    p = sub.add_parser("bench", help="push-forward overhead ratio")
    p.add_argument("--op", choices=("qr", "eigh"), required=True)
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "oed-gradient":
            report = run_oed(args)
        elif args.command == "check":
            report = checks.cmd_check(args.suite, args.seed, args.sizes)
        elif args.command == "dot-test":
            if args.degree < 1:
                parser.error("--degree must be >= 1")
            report = checks.cmd_dot_test(args.op, args.degree, args.seed, args.instances)
        else:
            if min(args.rows, args.cols, args.degree) < 1 or args.reps < 3:
                parser.error("sizes and degree must be positive and --reps >= 3")
            if args.op == "eigh" and args.rows != args.cols:
                parser.error("eigh needs --rows == --cols")
            report = checks.cmd_bench(args.op, args.rows, args.cols, args.degree, args.reps, args.seed)
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"utpm {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return _emit(report, args.format)


if __name__ == "__main__":
    sys.exit(main())
