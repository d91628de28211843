"""Taylor push-forward of the thin QR and symmetric eigendecompositions.

Both push-forwards start from a dense degree-0 factorization and then append
blocks of ``E`` new coefficients to ``D`` known ones (``1 <= E <= D``). The
default schedule doubles the number of known coefficients at every step.

Conventions at degree 0 fix the higher coefficients uniquely:

* QR: ``R`` has a positive diagonal.
* eigh: eigenvalues ascend; the largest-magnitude entry of every eigenvector
  is positive.
"""
from dataclasses import dataclass

import numpy as np

from .core import (
    DegreeError,
    ShapeError,
    SingularMatrixError,
    TaylorMatrix,
    mask_diag,
    mask_strict_lower,
    tp_hadamard,
    tp_mul,
    tp_mul_window,
    tp_reciprocal,
    tp_solve,
    tp_sub,
    tp_transpose,
)
from .kernels import householder_qr, jacobi_eigh

__all__ = [
    "QrFactors",
    "EighFactors",
    "DegenerateEigenvalues",
    "RankDeficientError",
    "NotSymmetricError",
    "base_qr",
    "base_eigh",
    "qr_extend",
    "qr_pushforward",
    "eigh_extend",
    "eigh_pushforward",
    "eigen_gap_reciprocals",
    "tol_sep",
    "tol_residual",
]

RANK_FACTOR = 1e3
SEP_FACTOR = 1e-8
RESIDUAL_FACTOR = 1e-10
SYMMETRY_FACTOR = 1e-10


class DegenerateEigenvalues(np.linalg.LinAlgError):
    pass


class RankDeficientError(SingularMatrixError):
    pass


class NotSymmetricError(ValueError):
    pass


def tol_sep(a0):
    return SEP_FACTOR * max(1.0, float(np.max(np.abs(a0))))


def tol_residual(a):
    scale = a.max_abs() if isinstance(a, TaylorMatrix) else float(np.max(np.abs(a)))
    return RESIDUAL_FACTOR * max(1.0, scale)


@dataclass(frozen=True)
class QrFactors:
    q: TaylorMatrix
    r: TaylorMatrix

    def __iter__(self):
        return iter((self.q, self.r))


@dataclass(frozen=True)
class EighFactors:
    q: TaylorMatrix
    lam: TaylorMatrix

    def __iter__(self):
        return iter((self.q, self.lam))

    @property
    def eigenvalues(self):
        """``(D, N)`` array of eigenvalue coefficients."""
        return np.diagonal(self.lam.coeffs, axis1=1, axis2=2).copy()


# -- degree 0 -----------------------------------------------------------------------

def base_qr(a0):
    """Thin Householder QR with ``diag(r0) > 0``."""
    a0 = np.asarray(a0, dtype=np.float64)
    if a0.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a0.shape}")
    m, n = a0.shape
    if m < n:
        raise ShapeError(f"QR needs rows >= cols, got {a0.shape}")
    q0, r0 = householder_qr(a0)
    scale = float(np.max(np.abs(a0))) if a0.size else 0.0
    thresh = RANK_FACTOR * np.finfo(float).eps * max(scale, np.finfo(float).tiny) * m
    if np.min(np.abs(np.diag(r0))) <= thresh:
        raise RankDeficientError(
            f"matrix is rank deficient (min |r_ii| = {np.min(np.abs(np.diag(r0))):.3e})")
    return q0, r0


def _check_symmetric(a, what="matrix"):
    a = np.asarray(a)
    tol = SYMMETRY_FACTOR * max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - np.swapaxes(a, -1, -2))))
    if asym > tol:
        raise NotSymmetricError(f"{what} is not symmetric (max asymmetry {asym:.3e})")


def base_eigh(a0):
    """Ascending eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Raises :class:`DegenerateEigenvalues` when two eigenvalues are closer
    than :func:`tol_sep`.
    """
    a0 = np.asarray(a0, dtype=np.float64)
    if a0.ndim != 2 or a0.shape[0] != a0.shape[1]:
        raise ShapeError(f"eigh needs a square matrix, got shape {a0.shape}")
    _check_symmetric(a0)
    w, v, converged = jacobi_eigh(0.5 * (a0 + a0.T))
    if not converged:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    # largest-magnitude entry of each column positive
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(v.shape[1])])
    v = v * signs
    if w.size > 1:
        gaps = np.diff(w)
        sep = tol_sep(a0)
        if np.min(gaps) <= sep:
            i = int(np.argmin(gaps))
            raise DegenerateEigenvalues(
                f"eigenvalues {w[i]!r} and {w[i + 1]!r} are closer than {sep:.3e}")
    return v, np.diag(w)


# -- QR push-forward -----------------------------------------------------------------

def _known_check(a, known, extend_by):
    d = known.degree_count
    if not 1 <= extend_by <= d:
        raise DegreeError(f"extension E={extend_by} outside 1..{d}")
    if a.degree_count < d + extend_by:
        raise DegreeError(
            f"input has {a.degree_count} coefficients, need {d + extend_by}")


def _residual_window(x, y, d, e):
    # zero-padding keeps the window [d, d+e) legal when e == d
    return tp_mul_window(x.extend(d + e), y.extend(d + e), d, d + e)


def _upper(x):
    return tp_sub(x, mask_strict_lower(x))


def qr_extend(a, q, r, extend_by):
    """Next ``extend_by`` coefficients of the thin QR factors of ``a``.

    ``q`` and ``r`` hold the ``D`` known coefficients. Returns ``(dq, dr)``
    with ``extend_by`` coefficients each, to be appended at ``t**D``.
    """
    _known_check(a, q, extend_by)
    d, e = q.degree_count, extend_by
    qt = tp_transpose(q)

    delta_f = _residual_window(q, r, d, e)
    delta_a = TaylorMatrix._wrap(a.coeffs[d:d + e].copy())
    h = tp_sub(delta_a, delta_f)
    # symmetric part of Q^T dQ cancels the orthogonality residual
    s = -0.5 * _residual_window(qt, q, d, e)

    q_e, qt_e, r_e = q.truncate(e), qt.truncate(e), r.truncate(e)
    try:
        r_inv = tp_solve(r_e, TaylorMatrix.identity(r.rows, e))
    except SingularMatrixError as exc:
        raise RankDeficientError(str(exc)) from exc

    qth = tp_mul(qt_e, h)
    x_lower = mask_strict_lower(tp_mul(qth, r_inv)) - mask_strict_lower(s)
    x = x_lower - tp_transpose(x_lower)
    k = s + x
    dr = _upper(qth - tp_mul(k, r_e))
    dq = tp_mul(h - tp_mul(q_e, dr), r_inv)
    return dq, dr


def _concat(known, new):
    return TaylorMatrix._wrap(np.concatenate([known.coeffs, new.coeffs], axis=0))


def _schedule(current, target, step):
    if step is None:
        return min(current, target - current)
    return min(step, current, target - current)


def qr_pushforward(a, degree_count=None, step=None):
    """Taylor coefficients of ``Q, R = qr(A(t))``.

    ``step=None`` doubles the known degree at each extension; an integer caps
    the block size (``step=1`` adds one coefficient at a time).
    """
    target = a.degree_count if degree_count is None else degree_count
    if target > a.degree_count or target < 1:
        raise DegreeError(f"target degree count {target} outside 1..{a.degree_count}")
    q0, r0 = base_qr(a.coeffs[0])
    q = TaylorMatrix.constant(q0, 1)
    r = TaylorMatrix.constant(r0, 1)
    while q.degree_count < target:
        e = _schedule(q.degree_count, target, step)
        dq, dr = qr_extend(a, q, r, e)
        q, r = _concat(q, dq), _concat(r, dr)
    return QrFactors(q, r)


# -- symmetric eigendecomposition push-forward -------------------------------------

def eigen_gap_reciprocals(lam):
    """Polynomial matrix ``H`` with ``H_ij = 1 / (lam_j - lam_i)`` off the
    diagonal and zero on it; ``lam`` is a diagonal Taylor matrix."""
    ev = np.diagonal(lam.coeffs, axis1=1, axis2=2)
    gaps = ev[:, None, :] - ev[:, :, None]
    n = lam.rows
    idx = np.arange(n)
    gaps[:, idx, idx] = 1.0
    sep = tol_sep(lam.coeffs[0])
    off0 = np.abs(gaps[0])
    off0[idx, idx] = np.inf
    if n > 1 and np.min(off0) <= sep:
        raise DegenerateEigenvalues(
            f"eigenvalue gap {np.min(off0):.3e} below separation tolerance {sep:.3e}")
    h = tp_reciprocal(TaylorMatrix._wrap(gaps)).coeffs.copy()
    h[:, idx, idx] = 0.0
    return TaylorMatrix._wrap(h)


def eigh_extend(a, q, lam, extend_by):
    """Next ``extend_by`` coefficients of the eigenfactors of symmetric ``a``.

    Returns ``(dq, dlam)``; ``dlam`` is exactly diagonal.
    """
    _known_check(a, q, extend_by)
    if a.rows != a.cols:
        raise ShapeError(f"eigh needs a square matrix, got {a.shape}")
    d, e = q.degree_count, extend_by
    _check_symmetric(a.coeffs[: d + e], "input")
    qt = tp_transpose(q)

    # coefficients d..d+e-1 of Q^T A Q - Lam with the known truncations
    qta = tp_mul(qt.extend(d + e), a.truncate(d).extend(d + e))
    delta_f = _residual_window(qta, q, d, e)
    s = -0.5 * _residual_window(qt, q, d, e)

    q_e, qt_e, lam_e = q.truncate(e), qt.truncate(e), lam.truncate(e)
    delta_a = TaylorMatrix._wrap(a.coeffs[d:d + e].copy())
    k = (delta_f + tp_mul(tp_mul(qt_e, delta_a), q_e)
         + tp_mul(s, lam_e) + tp_mul(lam_e, s))
    dlam = mask_diag(k)
    h = eigen_gap_reciprocals(lam_e)
    dq = tp_mul(q_e, tp_hadamard(h, k - dlam) + s)
    return dq, dlam


def eigh_pushforward(a, degree_count=None, step=None):
    """Taylor coefficients of the ascending eigendecomposition of ``A(t)``."""
    target = a.degree_count if degree_count is None else degree_count
    if target > a.degree_count or target < 1:
        raise DegreeError(f"target degree count {target} outside 1..{a.degree_count}")
    q0, lam0 = base_eigh(a.coeffs[0])
    q = TaylorMatrix.constant(q0, 1)
    lam = TaylorMatrix.constant(lam0, 1)
    while q.degree_count < target:
        e = _schedule(q.degree_count, target, step)
        dq, dlam = eigh_extend(a, q, lam, e)
        q, lam = _concat(q, dq), _concat(lam, dlam)
    return EighFactors(q, lam)
