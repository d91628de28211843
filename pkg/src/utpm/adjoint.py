"""Pullbacks of the elementary matrix operations.

Every pullback takes the adjoints of an operation's outputs together with the
saved primal values and returns the contributions to the adjoints of its
inputs. Accumulation (``+=``) is left to the caller. Adjoints are defined
through the pairing ``tr(Xbar^T dX)``.

All formulas are evaluated in truncated Taylor arithmetic, so the same code
serves as the plain pullback (degree count 1) and as its lifted version.
"""
import numpy as np

from .core import (
    ShapeError,
    TaylorMatrix,
    mask_diag,
    mask_strict_lower,
    tp_hadamard,
    tp_mul,
    tp_neg,
    tp_smul,
    tp_solve,
    tp_transpose,
)
from .linalg import eigen_gap_reciprocals

__all__ = [
    "pb_add",
    "pb_sub",
    "pb_mul",
    "pb_smul",
    "pb_inv",
    "pb_transpose",
    "pb_trace",
    "pb_hadamard",
    "pb_solve",
    "pb_qr",
    "pb_eigh",
    "pairing",
]


def pb_add(zbar):
    return zbar, zbar


def pb_sub(zbar):
    return zbar, tp_neg(zbar)


def pb_mul(zbar, x, y):
    """``Z = X Y``: returns ``(Zbar Y^T, X^T Zbar)``."""
    if zbar.shape != (x.rows, y.cols) or x.cols != y.rows:
        raise ShapeError(f"adjoint {zbar.shape} inconsistent with {x.shape} @ {y.shape}")
    return tp_mul(zbar, tp_transpose(y)), tp_mul(tp_transpose(x), zbar)


def pb_smul(zbar, a, x):
    """``Z = a X`` with a 1x1 polynomial ``a``."""
    abar = TaylorMatrix._wrap(
        tp_hadamard(x, zbar).coeffs.sum(axis=(1, 2)).reshape(-1, 1, 1))
    return abar, tp_smul(a, zbar)


def pb_inv(ybar, y):
    """``Y = X^{-1}``: returns ``-Y^T Ybar Y^T``."""
    if ybar.shape != y.shape:
        raise ShapeError(f"adjoint {ybar.shape} inconsistent with {y.shape}")
    yt = tp_transpose(y)
    return tp_neg(tp_mul(tp_mul(yt, ybar), yt))


def pb_transpose(ybar):
    return tp_transpose(ybar)


def pb_trace(ybar, n):
    return tp_smul(ybar, TaylorMatrix.identity(n, ybar.degree_count))


def pb_hadamard(zbar, x, y):
    return tp_hadamard(zbar, y), tp_hadamard(zbar, x)


def pb_solve(cbar, a, c):
    """``C = A^{-1} B``: returns ``(Abar, Bbar)``."""
    bbar = tp_solve(tp_transpose(a), cbar)
    return tp_neg(tp_mul(bbar, tp_transpose(c))), bbar


def pb_qr(qbar, rbar, q, r, square_fast_path=True):
    """Adjoint of the thin QR factorization ``Q, R = qr(A)``.

    Abar = Q (Rbar + P_L(R Rbar^T - Rbar R^T + Q^T Qbar - Qbar^T Q) R^{-T})
           + (Qbar - Q Q^T Qbar) R^{-T}

    For square ``A`` the last term vanishes identically and is skipped unless
    ``square_fast_path`` is false.
    """
    if qbar.shape != q.shape or rbar.shape != r.shape:
        raise ShapeError("adjoint shapes must match the saved factors")
    qt, rt = tp_transpose(q), tp_transpose(r)
    qt_qbar = tp_mul(qt, qbar)
    m = (tp_mul(r, tp_transpose(rbar)) - tp_mul(rbar, rt)
         + qt_qbar - tp_transpose(qt_qbar))
    # P_L(M) R^{-T} = (R^{-1} P_L(M)^T)^T
    rinv_t = tp_transpose(tp_solve(r, tp_transpose(mask_strict_lower(m))))
    abar = tp_mul(q, rbar + rinv_t)
    if q.rows != q.cols or not square_fast_path:
        tail = qbar - tp_mul(q, qt_qbar)
        abar = abar + tp_transpose(tp_solve(r, tp_transpose(tail)))
    return abar


def pb_eigh(qbar, lambar, q, lam, symmetrize=False):
    """Adjoint of the symmetric eigendecomposition with distinct eigenvalues.

    ``Abar = Q (diag(Lambar) + H o (Q^T Qbar)) Q^T`` with
    ``H_ij = 1 / (lam_j - lam_i)``. Off-diagonal entries of ``lambar`` are
    ignored. With ``symmetrize`` the symmetric part of ``Abar`` is returned.
    """
    if qbar.shape != q.shape or lambar.shape != lam.shape:
        raise ShapeError("adjoint shapes must match the saved factors")
    h = eigen_gap_reciprocals(lam)
    qt = tp_transpose(q)
    inner = mask_diag(lambar) + tp_hadamard(h, tp_mul(qt, qbar))
    abar = tp_mul(tp_mul(q, inner), qt)
    if symmetrize:
        abar = 0.5 * (abar + tp_transpose(abar))
    return abar


def pairing(xbar, xdot):
    """Polynomial ``tr(xbar^T xdot)`` as a ``(D,)`` array."""
    return np.trace(tp_mul(tp_transpose(xbar), xdot).coeffs, axis1=1, axis2=2)
