"""Numba kernels vs. the pure-numpy fallback, plus push-forward overhead ratios.

    python benchmarks/bench_kernels.py [--reps 7]

The first table times each kernel pair on the same inputs (JIT compilation is
excluded by a warm-up call) and checks that both produce the same numbers.
The second table reports TIME(push forward)/TIME(plain factorization) for the
reference sizes, next to the ratios 11.79 (QR) and 11.88 (eigh) quoted for
the original implementation. Those reference ratios are environment specific
and only printed for comparison.
"""
import argparse
import statistics
import time

import numpy as np

from utpm import backend_name, kernels
from utpm.checks import PAPER_RATIOS, cmd_bench


def median_time(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def kernel_cases(rng):
    x = rng.standard_normal((8, 100, 5))
    y = rng.standard_normal((8, 5, 5))
    a = rng.standard_normal((100, 5))
    s = rng.standard_normal((20, 20))
    s = s + s.T
    return [
        ("conv_window 8x(100x5)@(5x5)",
         lambda: kernels.conv_window_numba(x, y, 0, 8),
         lambda: kernels.conv_window_numpy(x, y, 0, 8)),
        ("householder_qr 100x5",
         lambda: kernels.householder_qr_numba(a),
         lambda: kernels.householder_qr_numpy(a)),
        ("jacobi_eigh 20x20",
         lambda: kernels.jacobi_eigh_numba(s, kernels.JACOBI_MAX_SWEEPS),
         lambda: kernels.jacobi_eigh_numpy(s, kernels.JACOBI_MAX_SWEEPS)),
    ]


def _max_diff(u, v):
    if isinstance(u, tuple):
        return max(_max_diff(a, b) for a, b in zip(u, v))
    return float(np.max(np.abs(np.asarray(u, dtype=float) - np.asarray(v, dtype=float))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    print(f"active backend: {backend_name()}")
    print(f"{'kernel':32s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, fast, slow in kernel_cases(rng):
        diff = _max_diff(fast(), slow())  # also the JIT warm-up
        t_fast = median_time(fast, args.reps)
        t_slow = median_time(slow, args.reps)
        print(f"{name:32s} {t_fast:12.3e} {t_slow:12.3e} {t_slow / t_fast:8.1f} {diff:10.1e}")

    print()
    print(f"{'push forward / plain':32s} {'ratio':>8s} {'reference':>10s}")
    for op, rows, cols in (("qr", 100, 5), ("eigh", 20, 20)):
        rep = cmd_bench(op, rows, cols, 4, max(args.reps, 3), args.seed)
        label = f"{op} {rows}x{cols} D=4"
        print(f"{label:32s} {rep.checks[0].value:8.2f} {PAPER_RATIOS[op]:10.2f}")


if __name__ == "__main__":
    main()
