import numpy as np
import pytest

from conftest import central_diff, rand_poly, separated_sym, well_conditioned
from utpm import (
    DegreeError,
    Graph,
    GraphError,
    OpKind,
    ShapeError,
    TaylorMatrix,
    eigh_pushforward,
    qr_pushforward,
    taylor_scalar,
    tp_inv,
    tp_mul,
    tp_trace,
)
from utpm.adjoint import pairing
from utpm.oed import record_program


def _one(d=1):
    return TaylorMatrix.constant(np.ones((1, 1)), d)


def test_record_two_nodes():
    g = Graph()
    x = g.input(2, 3)
    t = g.transpose(x)
    assert len(g) == 2 and g.independent_ids == [x]
    assert g.nodes[t].shape == (3, 2) and g.nodes[t].preds == (x,)
    assert g.successor_count(x) == 1 and g.successor_count(t) == 0


def test_dump_golden():
    g = Graph()
    x = g.input(3, 3)
    y = g.input(3, 3)
    z = g.mul(x, y)
    g.trace(g.add(z, x))
    assert g.dump() == (
        "0 input 3 3\n"
        "1 input 3 3\n"
        "2 mul 0 1 3 3\n"
        "3 add 2 0 3 3\n"
        "4 trace 3 1 1\n"
    )


def test_record_shape_errors():
    g = Graph()
    x = g.input(2, 3)
    with pytest.raises((GraphError, ShapeError)):
        g.mul(x, x)
    with pytest.raises((GraphError, ShapeError)):
        g.trace(x)
    with pytest.raises(GraphError):
        g.record(OpKind.ADD, (x, 99))
    c = g.constant(np.eye(2))
    with pytest.raises(GraphError):
        g.mark_dependent(c)


def test_forward_matches_direct_product(rng):
    g = Graph()
    x, y = g.input(3, 4), g.input(4, 2)
    z = g.mul(x, y)
    g.mark_dependent(z)
    xv, yv = rand_poly(rng, 3, 3, 4), rand_poly(rng, 3, 4, 2)
    out = g.forward({x: xv, y: yv})
    np.testing.assert_array_equal(out[z].coeffs, tp_mul(xv, yv).coeffs)


def test_forward_composition(rng):
    # inv(X) recorded in one graph, fed into trace(Y Y) in another
    x_val = well_conditioned(rng, 3, 3)
    g1 = Graph()
    x = g1.input(3, 3)
    y = g1.inv(x)
    g1.mark_dependent(y)
    mid = g1.forward({x: x_val})[y]
    g2 = Graph()
    u = g2.input(3, 3)
    s = g2.trace(g2.mul(u, u))
    g2.mark_dependent(s)
    composed = g2.forward({u: mid})[s]
    inv = tp_inv(x_val)
    direct = tp_trace(tp_mul(inv, inv))
    assert np.max(np.abs(composed.coeffs - direct.coeffs)) <= 1e-13


def test_forward_errors(rng):
    g = Graph()
    x, y = g.input(2, 2), g.input(2, 2)
    g.mark_dependent(g.add(x, y))
    with pytest.raises(GraphError):
        g.forward({x: rand_poly(rng, 1, 2, 2)})
    with pytest.raises(DegreeError):
        g.forward({x: rand_poly(rng, 1, 2, 2), y: rand_poly(rng, 2, 2, 2)})
    with pytest.raises(ShapeError):
        g.forward({x: rand_poly(rng, 1, 2, 3), y: rand_poly(rng, 1, 2, 3)})


def test_reverse_trace_of_square(rng):
    # d tr(X X) / dX = 2 X^T
    g = Graph()
    x = g.input(3, 3)
    s = g.trace(g.mul(x, x))
    xv = rng.standard_normal((3, 3))
    grad = g.gradient(s, {x: xv})[x]
    np.testing.assert_allclose(grad, 2 * xv.T, atol=1e-14)
    e = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            e[:] = 0
            e[i, j] = 1
            fd = central_diff(lambda h: np.trace((xv + h * e) @ (xv + h * e)))
            assert abs(fd - grad[i, j]) <= 1e-7


def test_gradient_two_inputs(rng):
    # f = tr(X Y + X): df/dX = Y^T + I, df/dY = X^T
    g = Graph()
    x, y = g.input(3, 3), g.input(3, 3)
    f = g.trace(g.add(g.mul(x, y), x))
    xv, yv = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    grads = g.gradient(f, {x: xv, y: yv})
    np.testing.assert_allclose(grads[x], yv.T + np.eye(3), atol=1e-14)
    np.testing.assert_allclose(grads[y], xv.T, atol=1e-14)


def test_fan_out_accumulates(rng):
    g = Graph()
    x = g.input(2, 2)
    s = g.trace(g.add(g.add(x, x), x))
    grad = g.gradient(s, {x: rng.standard_normal((2, 2))})[x]
    np.testing.assert_array_equal(grad, 3 * np.eye(2))


def test_adjoint_linearity(rng):
    g = Graph()
    x = g.input(3, 3)
    y = g.mul(g.inv(x), x)
    z = g.transpose(g.inv(x))
    g.mark_dependent(y, z)
    g.forward({x: well_conditioned(rng, 2, 3)})
    yb, zb = rand_poly(rng, 2, 3, 3), rand_poly(rng, 2, 3, 3)
    both = g.reverse({y: 2.0 * yb, z: zb})[x]
    only_y = g.reverse({y: yb})[x]
    only_z = g.reverse({z: zb})[x]
    assert (both - (2.0 * only_y + only_z)).max_abs() <= 1e-12


def test_determinism(rng):
    prog = record_program(rng.uniform(-1, 1, (8, 3)))
    y = taylor_scalar([1.3, 1.0, 0.0])
    runs = []
    for _ in range(2):
        out = prog.graph.forward({prog.y: y})[prog.phi]
        bar = prog.graph.reverse({prog.phi: _one(3)})[prog.y]
        runs.append((out.coeffs.tobytes(), bar.coeffs.tobytes()))
    assert runs[0] == runs[1]


def test_extract_coefficient_scatter(rng):
    g = Graph()
    x = g.input(2, 2)
    c = g.extract_coefficient(x, 1)
    g.mark_dependent(c)
    xv = rand_poly(rng, 3, 2, 2)
    out = g.forward({x: xv})[c]
    np.testing.assert_array_equal(out.coeffs[0], xv.coeffs[1])
    seed = TaylorMatrix(np.stack([np.eye(2), np.ones((2, 2)), np.ones((2, 2))]))
    bar = g.reverse({c: seed})[x]
    expected = np.zeros((3, 2, 2))
    expected[1] = np.eye(2)
    np.testing.assert_array_equal(bar.coeffs, expected)


def test_reverse_errors(rng):
    g = Graph()
    x = g.input(2, 2)
    s = g.trace(x)
    g.mark_dependent(s)
    with pytest.raises(GraphError):
        g.reverse({s: _one()})
    g.forward({x: rand_poly(rng, 2, 2, 2)})
    with pytest.raises(ShapeError):
        g.reverse({s: _one(1)})
    with pytest.raises(GraphError):
        g.reverse({x: rand_poly(rng, 2, 2, 2)})
    with pytest.raises(ShapeError):
        g.gradient(g.transpose(x), {x: np.eye(2)})


def test_qr_eigh_siblings_share_one_factorization(rng):
    g = Graph()
    a = g.input(5, 3)
    q, r = g.qr(a)
    g.mark_dependent(q, r)
    av = rand_poly(rng, 3, 5, 3)
    out = g.forward({a: av})
    ref = qr_pushforward(av)
    np.testing.assert_array_equal(out[q].coeffs, ref.q.coeffs)
    np.testing.assert_array_equal(out[r].coeffs, ref.r.coeffs)
    assert g.nodes[q].aux is g.nodes[r].aux


def test_eigenvalue_entry(rng):
    g = Graph()
    a = g.input(4, 4)
    _, lam = g.eigh(a)
    e = g.eigenvalue_entry(lam, 3)
    av = separated_sym(rng, 1, 4)
    grad = g.gradient(e, {a: av})[a]
    qmax = eigh_pushforward(av).q.coeffs[0][:, 3]
    np.testing.assert_allclose(grad, np.outer(qmax, qmax), atol=1e-14)


def test_oed_graph_is_small(rng):
    prog = record_program(rng.uniform(-1, 1, (10, 4)))
    assert len(prog.graph) <= 12
    assert prog.graph.independent_ids == [prog.y]


@pytest.mark.parametrize("which", ["qr", "eigh"])
def test_lifted_pairing_through_graph(rng, which):
    # 4-node graph: input -> factorization (2 nodes) -> mul
    d, h, n = 3, 1e-6, 4
    g = Graph()
    a = g.input(n, n)
    f0, f1 = g.qr(a) if which == "qr" else g.eigh(a)
    out = g.mul(f0, f1)
    g.mark_dependent(out)
    if which == "qr":
        av, c = rand_poly(rng, d, n, n), rng.uniform(-1, 1, (d, n, n))
    else:
        av, c = separated_sym(rng, d, n), rng.uniform(-1, 1, (d, n, n))
        c = c + c.transpose(0, 2, 1)
    adot = TaylorMatrix(c)
    plus = g.forward({a: av + h * adot})[out]
    minus = g.forward({a: av - h * adot})[out]
    ydot = TaylorMatrix((plus.coeffs - minus.coeffs) / (2 * h))
    g.forward({a: av})
    ybar = rand_poly(rng, d, n, n)
    abar = g.reverse({out: ybar})[a]
    np.testing.assert_allclose(pairing(ybar, ydot), pairing(abar, adot), atol=1e-6)
