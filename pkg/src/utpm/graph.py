"""Recorded computational graph with Taylor forward and adjoint reverse sweeps.

Nodes live in an arena in topological order: a node can only refer to nodes
recorded before it, so the graph is acyclic by construction. ``forward``
pushes Taylor polynomials through the nodes; ``reverse`` visits them
backwards and accumulates lifted adjoints.

Factorizations produce two values. ``Graph.qr`` and ``Graph.eigh`` record a
pair of sibling nodes (one per factor) that share a single factorization in
the forward sweep and a single pullback in the reverse sweep.

Extracting derivatives from a lifted reverse sweep: record every input at
degree count ``D`` and seed the scalar dependent with the constant
polynomial 1. Coefficient ``e`` of the returned adjoint of input ``x`` is then
``d y_e / d x_0``.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from . import adjoint as adj
from .core import (
    DegreeError,
    ShapeError,
    TaylorMatrix,
    tp_add,
    tp_hadamard,
    tp_inv,
    tp_mul,
    tp_smul,
    tp_solve,
    tp_sub,
    tp_trace,
    tp_transpose,
)
from .linalg import eigh_pushforward, qr_pushforward

__all__ = ["OpKind", "GraphNode", "Graph", "GraphError"]


class GraphError(RuntimeError):
    pass


class OpKind(enum.Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SMUL = "smul"
    TRANSPOSE = "transpose"
    TRACE = "trace"
    HADAMARD = "hadamard"
    INV = "inv"
    SOLVE = "solve"
    QR = "qr"
    EIGH = "eigh"
    EXTRACT_COEFFICIENT = "extract_coefficient"
    GET_EIGENVALUE_ENTRY = "get_eigenvalue_entry"
    CONSTANT = "constant"
    INPUT = "input"


@dataclass
class GraphNode:
    id: int
    kind: OpKind
    preds: tuple
    shape: tuple
    params: dict = field(default_factory=dict)
    value: TaylorMatrix = None
    adjoint: TaylorMatrix = None
    aux: object = None


def _infer_shape(kind, shapes, params):
    def need(cond, msg):
        if not cond:
            raise ShapeError(f"{kind.value}: {msg} (operand shapes {shapes})")

    if kind in (OpKind.ADD, OpKind.SUB, OpKind.HADAMARD):
        need(shapes[0] == shapes[1], "operands must have equal shapes")
        return shapes[0]
    if kind is OpKind.MUL:
        need(shapes[0][1] == shapes[1][0], "inner dimensions differ")
        return (shapes[0][0], shapes[1][1])
    if kind is OpKind.SMUL:
        need(shapes[0] == (1, 1), "first operand must be 1x1")
        return shapes[1]
    if kind is OpKind.TRANSPOSE:
        return (shapes[0][1], shapes[0][0])
    if kind is OpKind.TRACE:
        need(shapes[0][0] == shapes[0][1], "operand must be square")
        return (1, 1)
    if kind is OpKind.INV:
        need(shapes[0][0] == shapes[0][1], "operand must be square")
        return shapes[0]
    if kind is OpKind.SOLVE:
        need(shapes[0][0] == shapes[0][1], "matrix must be square")
        need(shapes[0][1] == shapes[1][0], "right-hand side rows differ")
        return shapes[1]
    if kind is OpKind.QR:
        m, n = shapes[0]
        need(m >= n, "needs rows >= cols")
        return (m, n) if params["output"] == 0 else (n, n)
    if kind is OpKind.EIGH:
        need(shapes[0][0] == shapes[0][1], "operand must be square")
        return shapes[0]
    if kind is OpKind.EXTRACT_COEFFICIENT:
        need(params["k"] >= 0, "coefficient index must be non-negative")
        return shapes[0]
    if kind is OpKind.GET_EIGENVALUE_ENTRY:
        n = shapes[0][0]
        need(shapes[0][0] == shapes[0][1], "operand must be square")
        need(-n <= params["index"] < n, "eigenvalue index out of range")
        return (1, 1)
    raise GraphError(f"cannot infer shape for {kind}")


class Graph:
    """Single-writer recorder and evaluator of a straight-line matrix program."""

    def __init__(self):
        self.nodes = []
        self.independent_ids = []
        self.dependent_ids = []
        self._successors = []
        self._degree_count = None

    def __len__(self):
        return len(self.nodes)

    # -- recording -------------------------------------------------------------

    def record(self, kind, preds=(), shape=None, **params):
        kind = OpKind(kind)
        preds = tuple(int(p) for p in preds)
        for p in preds:
            if not 0 <= p < len(self.nodes):
                raise GraphError(f"predecessor {p} has not been recorded")
        if kind in (OpKind.INPUT, OpKind.CONSTANT):
            if preds:
                raise GraphError(f"{kind.value} nodes take no predecessors")
            if shape is None:
                raise ShapeError(f"{kind.value} node needs an explicit shape")
            shape = tuple(int(s) for s in shape)
        else:
            inferred = _infer_shape(kind, [self.nodes[p].shape for p in preds], params)
            if shape is not None and tuple(shape) != inferred:
                raise ShapeError(f"{kind.value}: declared shape {shape} != {inferred}")
            shape = inferred
        node_id = len(self.nodes)
        self.nodes.append(GraphNode(node_id, kind, preds, shape, dict(params)))
        self._successors.append(0)
        for p in preds:
            self._successors[p] += 1
        if kind is OpKind.INPUT:
            self.independent_ids.append(node_id)
        return node_id

    def input(self, rows, cols):
        return self.record(OpKind.INPUT, shape=(rows, cols))

    def constant(self, value):
        value = np.atleast_2d(np.asarray(value, dtype=np.float64))
        return self.record(OpKind.CONSTANT, shape=value.shape, value_0=value)

    def add(self, x, y):
        return self.record(OpKind.ADD, (x, y))

    def sub(self, x, y):
        return self.record(OpKind.SUB, (x, y))

    def mul(self, x, y):
        return self.record(OpKind.MUL, (x, y))

    def smul(self, a, x):
        return self.record(OpKind.SMUL, (a, x))

    def transpose(self, x):
        return self.record(OpKind.TRANSPOSE, (x,))

    def trace(self, x):
        return self.record(OpKind.TRACE, (x,))

    def hadamard(self, x, y):
        return self.record(OpKind.HADAMARD, (x, y))

    def inv(self, x):
        return self.record(OpKind.INV, (x,))

    def solve(self, a, b):
        return self.record(OpKind.SOLVE, (a, b))

    def qr(self, a):
        """Record ``Q, R = qr(A)``; returns the two node ids."""
        q = self.record(OpKind.QR, (a,), output=0)
        r = self.record(OpKind.QR, (a,), output=1, partner=q)
        self.nodes[q].params["partner"] = r
        return q, r

    def eigh(self, a):
        """Record the ascending eigendecomposition; returns ``(Q, Lambda)`` ids."""
        q = self.record(OpKind.EIGH, (a,), output=0)
        lam = self.record(OpKind.EIGH, (a,), output=1, partner=q)
        self.nodes[q].params["partner"] = lam
        return q, lam

    def extract_coefficient(self, x, k):
        return self.record(OpKind.EXTRACT_COEFFICIENT, (x,), k=int(k))

    def eigenvalue_entry(self, lam, index):
        return self.record(OpKind.GET_EIGENVALUE_ENTRY, (lam,), index=int(index))

    def mark_dependent(self, *ids):
        for i in ids:
            if not 0 <= i < len(self.nodes):
                raise GraphError(f"unknown node {i}")
            if not self._reachable_from_inputs(i):
                raise GraphError(f"node {i} does not depend on any input")
            if i not in self.dependent_ids:
                self.dependent_ids.append(i)

    def _reachable_from_inputs(self, i):
        stack, seen = [i], set()
        while stack:
            j = stack.pop()
            if self.nodes[j].kind is OpKind.INPUT:
                return True
            if j not in seen:
                seen.add(j)
                stack.extend(self.nodes[j].preds)
        return False

    def successor_count(self, node_id):
        return self._successors[node_id]

    # -- forward sweep -----------------------------------------------------------

    def forward(self, inputs):
        """Push Taylor polynomials through the graph.

        ``inputs`` maps every independent id to a :class:`TaylorMatrix`;
        returns a dict mapping each dependent id to its value.
        """
        missing = [i for i in self.independent_ids if i not in inputs]
        if missing:
            raise GraphError(f"missing values for inputs {missing}")
        degrees = {inputs[i].degree_count for i in self.independent_ids}
        if len(degrees) > 1:
            raise DegreeError(f"inputs carry different degree counts {sorted(degrees)}")
        dcount = degrees.pop() if degrees else 1
        for node in self.nodes:
            node.value, node.aux, node.adjoint = None, None, None
        for node in self.nodes:
            if node.kind is OpKind.INPUT:
                x = inputs[node.id]
                if x.shape != node.shape:
                    raise ShapeError(f"input {node.id}: expected {node.shape}, got {x.shape}")
                node.value = x
            else:
                node.value = self._push(node, dcount)
        self._degree_count = dcount
        return {i: self.nodes[i].value for i in self.dependent_ids}

    def _push(self, node, dcount):
        kind = node.kind
        args = [self.nodes[p].value for p in node.preds]
        if kind is OpKind.CONSTANT:
            return TaylorMatrix.constant(node.params["value_0"], dcount)
        if kind is OpKind.ADD:
            return tp_add(*args)
        if kind is OpKind.SUB:
            return tp_sub(*args)
        if kind is OpKind.MUL:
            return tp_mul(*args)
        if kind is OpKind.SMUL:
            return tp_smul(*args)
        if kind is OpKind.TRANSPOSE:
            return tp_transpose(args[0])
        if kind is OpKind.TRACE:
            return tp_trace(args[0])
        if kind is OpKind.HADAMARD:
            return tp_hadamard(*args)
        if kind is OpKind.INV:
            return tp_inv(args[0])
        if kind is OpKind.SOLVE:
            return tp_solve(*args)
        if kind in (OpKind.QR, OpKind.EIGH):
            partner_id = node.params.get("partner")
            if partner_id is not None and self.nodes[partner_id].aux is not None:
                factors = self.nodes[partner_id].aux
            elif kind is OpKind.QR:
                factors = qr_pushforward(args[0])
            else:
                factors = eigh_pushforward(args[0])
            node.aux = factors
            return tuple(factors)[node.params["output"]]
        if kind is OpKind.EXTRACT_COEFFICIENT:
            k = node.params["k"]
            x = args[0]
            if k >= x.degree_count:
                raise DegreeError(f"coefficient {k} not available at degree count {dcount}")
            return TaylorMatrix.constant(x.coeffs[k], dcount)
        if kind is OpKind.GET_EIGENVALUE_ENTRY:
            i = node.params["index"]
            return TaylorMatrix(args[0].coeffs[:, i, i].reshape(-1, 1, 1))
        raise GraphError(f"no push-forward registered for {kind}")

    # -- reverse sweep -------------------------------------------------------------

    def reverse(self, seeds):
        """Accumulate lifted adjoints from the dependents back to the inputs.

        ``seeds`` maps dependent ids to output adjoints; dependents without a
        seed get zero. Returns a dict mapping each independent id to its
        adjoint.
        """
        if self._degree_count is None or any(n.value is None for n in self.nodes):
            raise GraphError("forward() must run before reverse()")
        dcount = self._degree_count
        for node in self.nodes:
            node.adjoint = TaylorMatrix.zeros(dcount, *node.shape)
        for i, seed in seeds.items():
            if i not in self.dependent_ids:
                raise GraphError(f"node {i} is not a dependent")
            node = self.nodes[i]
            if seed.shape != node.shape or seed.degree_count != dcount:
                raise ShapeError(
                    f"seed for node {i} must be {node.shape} with {dcount} coefficients")
            node.adjoint = tp_add(node.adjoint, seed)
        for node in reversed(self.nodes):
            if node.kind in (OpKind.INPUT, OpKind.CONSTANT):
                continue
            for p, contrib in self._pull(node):
                pred = self.nodes[p]
                pred.adjoint = tp_add(pred.adjoint, contrib)
        return {i: self.nodes[i].adjoint for i in self.independent_ids}

    def _pull(self, node):
        kind = node.kind
        ybar = node.adjoint
        preds = node.preds
        args = [self.nodes[p].value for p in preds]
        if kind is OpKind.ADD:
            return zip(preds, adj.pb_add(ybar))
        if kind is OpKind.SUB:
            return zip(preds, adj.pb_sub(ybar))
        if kind is OpKind.MUL:
            return zip(preds, adj.pb_mul(ybar, *args))
        if kind is OpKind.SMUL:
            return zip(preds, adj.pb_smul(ybar, *args))
        if kind is OpKind.TRANSPOSE:
            return [(preds[0], adj.pb_transpose(ybar))]
        if kind is OpKind.TRACE:
            return [(preds[0], adj.pb_trace(ybar, self.nodes[preds[0]].shape[0]))]
        if kind is OpKind.HADAMARD:
            return zip(preds, adj.pb_hadamard(ybar, *args))
        if kind is OpKind.INV:
            return [(preds[0], adj.pb_inv(ybar, node.value))]
        if kind is OpKind.SOLVE:
            return zip(preds, adj.pb_solve(ybar, args[0], node.value))
        if kind in (OpKind.QR, OpKind.EIGH):
            q, second = node.aux
            bars = [TaylorMatrix.zeros(ybar.degree_count, *q.shape),
                    TaylorMatrix.zeros(ybar.degree_count, *second.shape)]
            bars[node.params["output"]] = ybar
            partner_id = node.params.get("partner")
            if partner_id is not None:
                if partner_id > node.id:
                    # the later sibling pulls back both factors at once
                    return []
                partner = self.nodes[partner_id]
                bars[partner.params["output"]] = partner.adjoint
            if kind is OpKind.QR:
                return [(preds[0], adj.pb_qr(bars[0], bars[1], q, second))]
            return [(preds[0], adj.pb_eigh(bars[0], bars[1], q, second))]
        if kind is OpKind.EXTRACT_COEFFICIENT:
            k = node.params["k"]
            c = np.zeros((self._degree_count,) + node.shape)
            c[k] = ybar.coeffs[0]
            return [(preds[0], TaylorMatrix(c))]
        if kind is OpKind.GET_EIGENVALUE_ENTRY:
            i = node.params["index"]
            shape = self.nodes[preds[0]].shape
            c = np.zeros((self._degree_count,) + shape)
            c[:, i, i] = ybar.coeffs[:, 0, 0]
            return [(preds[0], TaylorMatrix(c))]
        raise GraphError(f"no pullback registered for {kind}")

    # -- conveniences ----------------------------------------------------------------

    def gradient(self, dependent, inputs):
        """Plain gradient of a scalar dependent at the given input matrices."""
        if self.nodes[dependent].shape != (1, 1):
            raise ShapeError("gradient needs a 1x1 dependent")
        if dependent not in self.dependent_ids:
            self.mark_dependent(dependent)
        values = {}
        for i, x in inputs.items():
            values[i] = x.truncate(1) if isinstance(x, TaylorMatrix) else TaylorMatrix.constant(x, 1)
        self.forward(values)
        bars = self.reverse({dependent: TaylorMatrix.constant(np.ones((1, 1)), 1)})
        return {i: b.coeffs[0].copy() for i, b in bars.items()}

    def dump(self):
        """One line per node: ``id kind pred_ids... rows cols``."""
        lines = []
        for n in self.nodes:
            fields = [str(n.id), n.kind.value, *(str(p) for p in n.preds), str(n.shape[0]), str(n.shape[1])]
            lines.append(" ".join(fields))
        return "\n".join(lines) + "\n"
