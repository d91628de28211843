"""Gradient of an E-optimal experimental design criterion.

The model is ``F(x, y) = B x y`` with a random ``B`` of shape ``(n_m, n_x)``.
Its Jacobian with respect to ``x`` is ``J = y B``; the parameter covariance is
``C = (J^T J)^{-1}`` and the criterion is the largest eigenvalue of ``C``.
``C`` is formed through a QR factorization of ``J`` so that ``J^T J`` is
never built::

    J = y B;  Q, R = qr(J);  D = solve(R, I);  C = D D^T;  U, Lam = eigh(C)
    Phi = Lam[-1, -1]

For this model ``Phi(y) = y**-2 * lambda_max((B^T B)^{-1})``, which gives an
analytic derivative to check both AD modes against.
"""
from dataclasses import dataclass

import numpy as np

from .core import TaylorMatrix, taylor_scalar
from .graph import Graph

__all__ = [
    "OedConfig",
    "OedProgram",
    "make_problem",
    "record_program",
    "oed_objective",
    "oed_gradient_forward",
    "oed_gradient_reverse",
    "objective_dense",
    "gradient_analytic",
]


@dataclass(frozen=True)
class OedConfig:
    n_m: int = 50
    n_x: int = 11
    y0: float = 1.0
    seed: int = 0
    degree: int = 2
    tol: float = 1e-12

    def __post_init__(self):
        if not self.n_m >= self.n_x >= 1:
            raise ValueError(f"need n_m >= n_x >= 1, got n_m={self.n_m}, n_x={self.n_x}")
        if self.y0 == 0.0:
            raise ValueError("y0 must be nonzero")
        if self.degree < 2:
            raise ValueError("degree must be at least 2")


def make_problem(cfg):
    """Seeded ``(B, x)``, entries uniform on [-1, 1] from numpy's PCG64."""
    rng = np.random.default_rng(cfg.seed)
    b = rng.uniform(-1.0, 1.0, size=(cfg.n_m, cfg.n_x))
    x = rng.uniform(-1.0, 1.0, size=cfg.n_x)
    return b, x


@dataclass
class OedProgram:
    graph: Graph
    y: int
    phi: int


def record_program(b):
    n_x = b.shape[1]
    g = Graph()
    y = g.input(1, 1)
    b_node = g.constant(b)
    jac = g.smul(y, b_node)
    _, r = g.qr(jac)
    d = g.solve(r, g.constant(np.eye(n_x)))
    c = g.mul(d, g.transpose(d))
    _, lam = g.eigh(c)
    phi = g.eigenvalue_entry(lam, n_x - 1)
    g.mark_dependent(phi)
    return OedProgram(g, y, phi)


def _matrix(cfg, b):
    return make_problem(cfg)[0] if b is None else np.asarray(b, dtype=float)


def oed_objective(cfg, b=None):
    b = _matrix(cfg, b)
    prog = record_program(b)
    out = prog.graph.forward({prog.y: taylor_scalar([cfg.y0])})
    return float(out[prog.phi].coeffs[0, 0, 0])


def _seeded_curve(cfg):
    c = np.zeros(cfg.degree)
    c[0], c[1] = cfg.y0, 1.0
    return taylor_scalar(c)


def oed_gradient_forward(cfg, b=None):
    """dPhi/dy from coefficient 1 of the pushed-forward ``[y] = y0 + t``."""
    b = _matrix(cfg, b)
    prog = record_program(b)
    out = prog.graph.forward({prog.y: _seeded_curve(cfg)})
    return float(out[prog.phi].coeffs[1, 0, 0])


def oed_gradient_reverse(cfg, b=None):
    """dPhi/dy from a lifted reverse sweep seeded with ``[Phibar] = 1``."""
    b = _matrix(cfg, b)
    prog = record_program(b)
    prog.graph.forward({prog.y: _seeded_curve(cfg)})
    seed = TaylorMatrix.constant(np.ones((1, 1)), cfg.degree)
    ybar = prog.graph.reverse({prog.phi: seed})[prog.y]
    return float(ybar.coeffs[0, 0, 0])


def _lambda_max_inv_gram(b):
    gram = b.T @ b
    return float(np.max(np.linalg.eigvalsh(np.linalg.inv(gram))))


def objective_dense(b, y0):
    """Reference value through the explicit inverse of ``B^T B``."""
    return y0 ** -2 * _lambda_max_inv_gram(b)


def gradient_analytic(b, y0):
    return -2.0 * y0 ** -3 * _lambda_max_inv_gram(b)
