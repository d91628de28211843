"""Self-checks driven by the command-line tool.

These are runtime verification suites: residuals of the defining identities,
structural lemmas, dot-tests of the pullbacks and gradient checks through the
graph. Each suite returns a :class:`~utpm.report.RunReport`.
"""
import statistics
import time

import numpy as np

from . import adjoint as adj
from .core import (
    TaylorMatrix,
    dumps,
    loads,
    mask_diag,
    mask_strict_lower,
    mask_strict_upper,
    tp_hadamard,
    tp_inv,
    tp_mul,
    tp_mul_window,
    tp_solve,
    tp_trace,
    tp_transpose,
)
from .graph import Graph
from .linalg import base_eigh, base_qr, eigh_pushforward, qr_pushforward
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

SUITES = ("core", "qr", "eigh", "adjoint", "graph")
DOT_OPS = ("mul", "inv", "solve", "qr", "eigh")

PAPER_RATIOS = {"qr": 11.79, "eigh": 11.88}


# -- random instances --------------------------------------------------------------

def random_poly(rng, d, m, n):
    return TaylorMatrix(rng.uniform(-1.0, 1.0, size=(d, m, n)))


def well_conditioned(rng, d, n):
    """Square polynomial whose degree-0 block is diagonally dominant."""
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    c[0] += n * np.eye(n)
    return TaylorMatrix(c)


def separated_symmetric(rng, d, n, gap=1.0):
    """Symmetric polynomial with degree-0 eigenvalues ``gap, 2 gap, ..., n gap``."""
    q0, _ = np.linalg.qr(rng.standard_normal((n, n)))
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    c = 0.5 * (c + c.transpose(0, 2, 1))
    a0 = q0 @ np.diag(gap * np.arange(1, n + 1)) @ q0.T
    c[0] = 0.5 * (a0 + a0.T)
    return TaylorMatrix(c)


def symmetric_poly(rng, d, n):
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    return TaylorMatrix(0.5 * (c + c.transpose(0, 2, 1)))


def _scale(*xs):
    return max([1.0] + [x.max_abs() for x in xs])


# -- dot-tests -----------------------------------------------------------------------

def _op_table(rng, degree):
    """op name -> (inputs, tangents, forward, pullback)."""
    n = 4
    table = {}

    x, y = random_poly(rng, degree, 3, n), random_poly(rng, degree, n, 2)
    table["mul"] = (
        (x, y),
        (random_poly(rng, degree, 3, n), random_poly(rng, degree, n, 2)),
        lambda a, b: (tp_mul(a, b),),
        lambda bars, ins, outs: adj.pb_mul(bars[0], *ins),
    )
    a = well_conditioned(rng, degree, n)
    table["inv"] = (
        (a,),
        (random_poly(rng, degree, n, n),),
        lambda a: (tp_inv(a),),
        lambda bars, ins, outs: (adj.pb_inv(bars[0], outs[0]),),
    )
    a, b = well_conditioned(rng, degree, n), random_poly(rng, degree, n, 3)
    table["solve"] = (
        (a, b),
        (random_poly(rng, degree, n, n), random_poly(rng, degree, n, 3)),
        lambda a, b: (tp_solve(a, b),),
        lambda bars, ins, outs: adj.pb_solve(bars[0], ins[0], outs[0]),
    )
    a = random_poly(rng, degree, 5, 3)
    table["qr"] = (
        (a,),
        (random_poly(rng, degree, 5, 3),),
        lambda a: tuple(qr_pushforward(a)),
        lambda bars, ins, outs: (adj.pb_qr(bars[0], bars[1], *outs),),
    )
    a = separated_symmetric(rng, degree, 5)
    table["eigh"] = (
        (a,),
        (symmetric_poly(rng, degree, 5),),
        lambda a: tuple(eigh_pushforward(a)),
        lambda bars, ins, outs: (adj.pb_eigh(bars[0], bars[1], *outs),),
    )
    return table


def _tangent_exact(forward, inputs, tangents):
    """Output tangents by pushing ``x + xdot t`` through at degree count 2."""
    lifted = [TaylorMatrix(np.stack([x.coeffs[0], dx.coeffs[0]])) for x, dx in zip(inputs, tangents)]
    return [TaylorMatrix(o.coeffs[1:2]) for o in forward(*lifted)]


def _tangent_fd(forward, inputs, tangents, h=1e-6):
    plus = forward(*[x + h * dx for x, dx in zip(inputs, tangents)])
    minus = forward(*[x - h * dx for x, dx in zip(inputs, tangents)])
    return [(p - m) * (0.5 / h) for p, m in zip(plus, minus)]


def dot_test(op, rng, degree=1):
    """Return ``(lhs, rhs)`` coefficient arrays of the adjoint pairing.

    ``lhs = sum_out tr(outbar^T outdot)``, ``rhs = sum_in tr(inbar^T indot)``,
    both as truncated polynomials. Tangents come from the push-forward at
    degree count 1 and from central differences otherwise.
    """
    inputs, tangents, forward, pullback = _op_table(rng, degree)[op]
    outputs = forward(*inputs)
    if degree == 1:
        out_dot = _tangent_exact(forward, inputs, tangents)
    else:
        out_dot = _tangent_fd(forward, inputs, tangents)
    bars = [random_poly(rng, degree, *o.shape) for o in outputs]
    in_bars = pullback(bars, inputs, outputs)
    lhs = sum(adj.pairing(b, d) for b, d in zip(bars, out_dot))
    rhs = sum(adj.pairing(b, d) for b, d in zip(in_bars, tangents))
    return lhs, rhs


def cmd_dot_test(op, degree=1, seed=0, instances=20):
    rng = np.random.default_rng(seed)
    tol = 1e-9 if degree == 1 else 1e-6
    report = RunReport("dot-test", {"op": op, "degree": degree, "seed": seed, "instances": instances})
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(instances):
        lhs, rhs = dot_test(op, rng, degree)
        err = np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        worst = max(worst, float(np.max(err)))
    report.timings["total"] = time.perf_counter() - t0
    report.add_error(f"{op} worst relative pairing error", worst, tol)
    return report


# -- suites ----------------------------------------------------------------------------

def _parse_sizes(sizes, default):
    if not sizes:
        return default
    out = []
    for tok in sizes:
        if "x" in tok:
            m, n = tok.split("x")
            out.append((int(m), int(n)))
        else:
            out.append((int(tok), int(tok)))
    return out


def suite_core(report, rng, sizes, trials=50):
    d = 4
    worst = {"assoc": 0.0, "distrib": 0.0, "inverse": 0.0, "solve": 0.0, "lemma3": 0.0}
    exact_fail = {"lemma1": 0, "lemma2": 0, "lemma4": 0, "partition": 0, "window": 0, "txt": 0}
    for _ in range(trials):
        m, n = sizes[rng.integers(len(sizes))]
        x, y, z = random_poly(rng, d, m, n), random_poly(rng, d, n, n), random_poly(rng, d, n, n)
        lhs, rhs = tp_mul(tp_mul(x, y), z), tp_mul(x, tp_mul(y, z))
        worst["assoc"] = max(worst["assoc"], (lhs - rhs).max_abs() / _scale(lhs))
        lhs, rhs = tp_mul(x, y + z), tp_mul(x, y) + tp_mul(x, z)
        worst["distrib"] = max(worst["distrib"], (lhs - rhs).max_abs() / _scale(lhs))
        a = well_conditioned(rng, d, n)
        worst["inverse"] = max(worst["inverse"], (tp_mul(a, tp_inv(a)) - TaylorMatrix.identity(n, d)).max_abs())
        worst["solve"] = max(worst["solve"], (tp_mul(a, tp_solve(a, x.T)) - x.T).max_abs() / _scale(x))
        sq = random_poly(rng, d, n, n)
        if tp_transpose(mask_strict_lower(sq)) != mask_strict_upper(tp_transpose(sq)):
            exact_fail["lemma1"] += 1
        anti = sq - tp_transpose(sq)
        if anti != mask_strict_lower(anti) - tp_transpose(mask_strict_lower(anti)):
            exact_fail["lemma2"] += 1
        diag = mask_diag(random_poly(rng, d, n, n))
        if np.any(mask_diag(tp_mul(diag, anti) - tp_mul(anti, diag)).coeffs):
            exact_fail["lemma4"] += 1
        if mask_strict_lower(sq) + mask_strict_upper(sq) + mask_diag(sq) != sq:
            exact_fail["partition"] += 1
        b, c = random_poly(rng, d, n, n), random_poly(rng, d, n, n)
        l3 = tp_trace(tp_mul(tp_transpose(sq), tp_hadamard(b, c)))
        r3 = tp_trace(tp_mul(tp_transpose(c), tp_hadamard(b, sq)))
        worst["lemma3"] = max(worst["lemma3"], (l3 - r3).max_abs() / _scale(l3))
        full = tp_mul(x.extend(2 * d - 1), y.extend(2 * d - 1))
        if tp_mul_window(x, y, d, 2 * d - 1).coeffs.tolist() != full.coeffs[d:].tolist():
            exact_fail["window"] += 1
        if loads(dumps(x)) != x:
            exact_fail["txt"] += 1
    report.add_error("ring associativity (relative)", worst["assoc"], 1e-13)
    report.add_error("ring distributivity (relative)", worst["distrib"], 1e-13)
    report.add_error("inverse residual", worst["inverse"], 1e-12)
    report.add_error("solve residual (relative)", worst["solve"], 1e-12)
    report.add_error("lemma 3 trace identity (relative)", worst["lemma3"], 1e-13)
    for name, count in exact_fail.items():
        report.add(f"{name} exact failures", count, 0, 0)


def _qr_residuals(a, f):
    n = a.cols
    res = (tp_mul(f.q, f.r) - a).max_abs()
    orth = (tp_mul(tp_transpose(f.q), f.q) - TaylorMatrix.identity(n, a.degree_count)).max_abs()
    return res, orth, int(np.count_nonzero(np.tril(f.r.coeffs, -1)))


def _eigh_residuals(a, f):
    n = a.cols
    res = (tp_mul(tp_mul(tp_transpose(f.q), a), f.q) - f.lam).max_abs()
    orth = (tp_mul(tp_transpose(f.q), f.q) - TaylorMatrix.identity(n, a.degree_count)).max_abs()
    off = f.lam.coeffs - mask_diag(f.lam).coeffs
    return res, orth, int(np.count_nonzero(off))


def _normalize_columns(q_ref, q):
    signs = np.sign(np.sum(q_ref * q, axis=0))
    signs[signs == 0] = 1.0
    return q * signs


def suite_qr(report, rng, sizes, degree=4):
    worst_res = worst_orth = worst_fd = worst_sched = 0.0
    lower = 0
    for m, n in sizes:
        m = max(m, n)
        a = random_poly(rng, degree, m, n)
        f = qr_pushforward(a)
        res, orth, nz = _qr_residuals(a, f)
        worst_res = max(worst_res, res / _scale(a))
        worst_orth = max(worst_orth, orth)
        lower += nz
        g = qr_pushforward(a, step=1)
        worst_sched = max(worst_sched, (g.q - f.q).max_abs(), (g.r - f.r).max_abs())
        # central differences of the degree-0 factorization along A0 + t A1
        h = 1e-6
        qp, rp = base_qr(a.coeffs[0] + h * a.coeffs[1])
        qm, rm = base_qr(a.coeffs[0] - h * a.coeffs[1])
        worst_fd = max(worst_fd,
                       np.max(np.abs((qp - qm) / (2 * h) - f.q.coeffs[1])),
                       np.max(np.abs((rp - rm) / (2 * h) - f.r.coeffs[1])))
    report.add_error("QR defining residual (relative)", worst_res, 1e-11)
    report.add_error("QR orthogonality residual", worst_orth, 1e-11)
    report.add("QR strict-lower nonzeros", lower, 0, 0)
    report.add_error("QR schedule independence", worst_sched, 1e-12)
    report.add_error("QR coefficient 1 vs finite differences", worst_fd, 1e-6)


def suite_eigh(report, rng, sizes, degree=4):
    worst_res = worst_orth = worst_fd = worst_sched = 0.0
    offdiag = 0
    for m, _ in sizes:
        a = separated_symmetric(rng, degree, m)
        f = eigh_pushforward(a)
        res, orth, nz = _eigh_residuals(a, f)
        worst_res = max(worst_res, res / _scale(a))
        worst_orth = max(worst_orth, orth)
        offdiag += nz
        g = eigh_pushforward(a, step=1)
        worst_sched = max(worst_sched, (g.q - f.q).max_abs(), (g.lam - f.lam).max_abs())
        h = 1e-6
        qp, lp = base_eigh(a.coeffs[0] + h * a.coeffs[1])
        qm, lm = base_eigh(a.coeffs[0] - h * a.coeffs[1])
        q0 = f.q.coeffs[0]
        dq = (_normalize_columns(q0, qp) - _normalize_columns(q0, qm)) / (2 * h)
        worst_fd = max(worst_fd,
                       np.max(np.abs(dq - f.q.coeffs[1])),
                       np.max(np.abs((lp - lm) / (2 * h) - f.lam.coeffs[1])))
    report.add_error("eigh defining residual (relative)", worst_res, 1e-10)
    report.add_error("eigh orthogonality residual", worst_orth, 1e-10)
    report.add("eigh off-diagonal nonzeros in Lambda", offdiag, 0, 0)
    report.add_error("eigh schedule independence", worst_sched, 1e-12)
    report.add_error("eigh coefficient 1 vs finite differences", worst_fd, 1e-6)


def suite_adjoint(report, rng, instances=20):
    for op in DOT_OPS:
        worst = 0.0
        for _ in range(instances):
            lhs, rhs = dot_test(op, rng, 1)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
        report.add_error(f"dot-test {op}", worst, 1e-9)
    for op in ("qr", "eigh"):
        lhs, rhs = dot_test(op, rng, 3)
        err = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))
        report.add_error(f"lifted pairing {op} (degree 3)", err, 1e-6)


def suite_graph(report, rng, seed):
    n = 3
    g = Graph()
    x, y = g.input(n, n), g.input(n, n)
    f = g.trace(g.add(g.mul(x, y), x))
    g.mark_dependent(f)
    x0, y0 = rng.uniform(-1, 1, (n, n)), rng.uniform(-1, 1, (n, n))
    grads = g.gradient(f, {x: x0, y: y0})
    report.add_error("tr(xy + x) gradient wrt x", np.max(np.abs(grads[x] - (y0 + np.eye(n)).T)), 1e-12)
    report.add_error("tr(xy + x) gradient wrt y", np.max(np.abs(grads[y] - x0.T)), 1e-12)

    cfg = OedConfig(seed=seed)
    b, _ = make_problem(cfg)
    fwd, rev = oed_gradient_forward(cfg), oed_gradient_reverse(cfg)
    report.add("OED objective (QR route vs dense route)", oed_objective(cfg), objective_dense(b, cfg.y0), 1e-10)
    report.add("OED forward gradient vs analytic", fwd, gradient_analytic(b, cfg.y0), 1e-12)
    report.add("OED reverse gradient vs forward", rev, fwd, 1e-11)


def cmd_check(suite="all", seed=0, sizes=None):
    rng = np.random.default_rng(seed)
    names = SUITES if suite == "all" else (suite,)
    report = RunReport("check", {"suite": suite, "seed": seed, "sizes": ",".join(sizes or []) or "default"})
    t0 = time.perf_counter()
    for name in names:
        ts = time.perf_counter()
        if name == "core":
            suite_core(report, rng, _parse_sizes(sizes, [(3, 3), (4, 2), (2, 5)]))
        elif name == "qr":
            suite_qr(report, rng, _parse_sizes(sizes, [(6, 3), (4, 4), (100, 5)]))
        elif name == "eigh":
            suite_eigh(report, rng, _parse_sizes(sizes, [(3, 3), (5, 5), (20, 20)]))
        elif name == "adjoint":
            suite_adjoint(report, rng)
        elif name == "graph":
            suite_graph(report, rng, seed)
        else:
            raise ValueError(f"unknown suite {name!r}")
        report.timings[name] = time.perf_counter() - ts
    report.timings["total"] = time.perf_counter() - t0
    return report


# -- benchmark -------------------------------------------------------------------------

def _median_time(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cmd_bench(op, rows, cols, degree, reps, seed=0):
    """Median wall-clock ratio TIME(push forward) / TIME(degree-0 factorization)."""
    if reps < 3:
        raise ValueError("need at least 3 repetitions")
    rng = np.random.default_rng(seed)
    if op == "qr":
        a = random_poly(rng, degree, rows, cols)
        plain, push = (lambda: base_qr(a.coeffs[0])), (lambda: qr_pushforward(a))
    elif op == "eigh":
        a = separated_symmetric(rng, degree, rows)
        plain, push = (lambda: base_eigh(a.coeffs[0])), (lambda: eigh_pushforward(a))
    else:
        raise ValueError(f"unknown op {op!r}")
    # warm-up absorbs JIT compilation
    plain()
    push()
    t_plain = _median_time(plain, reps)
    t_push = _median_time(push, reps)
    ratio = t_push / t_plain
    report = RunReport("bench", {"op": op, "rows": a.rows, "cols": a.cols, "degree": degree, "reps": reps})
    report.timings.update({"plain_median": t_plain, "pushforward_median": t_push})
    report.add("TIME(push forward)/TIME(plain)", ratio, PAPER_RATIOS.get(op, float("nan")),
               float("inf"), informational=True)
    return report
