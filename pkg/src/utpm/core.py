"""Truncated Taylor polynomials with matrix coefficients.

A :class:`TaylorMatrix` holds ``D`` coefficient matrices of shape ``(M, N)``
stacked along the first axis, so ``coeffs[d]`` multiplies ``t**d``. All
arithmetic is truncated after ``D`` coefficients. Values are immutable; every
operation returns a new object.
"""
import numbers
import warnings

import numpy as np
import scipy.linalg

from .kernels import conv_window

__all__ = [
    "TaylorMatrix",
    "TaylorScalar",
    "ShapeError",
    "DegreeError",
    "SingularMatrixError",
    "taylor_scalar",
    "tp_add",
    "tp_sub",
    "tp_neg",
    "tp_mul",
    "tp_mul_window",
    "tp_transpose",
    "tp_trace",
    "tp_hadamard",
    "tp_smul",
    "tp_inv",
    "tp_solve",
    "tp_reciprocal",
    "tp_eval",
    "mask_strict_lower",
    "mask_strict_upper",
    "mask_diag",
    "dumps",
    "loads",
    "save",
    "load",
]

EPS = np.finfo(float).eps
SINGULAR_FACTOR = 1e3


class ShapeError(ValueError):
    pass


class DegreeError(ValueError):
    pass


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class TaylorMatrix:
    """Degree-truncated polynomial ``sum_d coeffs[d] t**d`` over real matrices."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=np.float64)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3:
            raise ShapeError(f"coefficients must have shape (D, M, N), got {c.shape}")
        if min(c.shape) < 1:
            raise ShapeError(f"empty dimension in coefficient shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        self._c = c

    # -- constructors --
    @classmethod
    def constant(cls, value, degree_count):
        value = np.atleast_2d(np.asarray(value, dtype=np.float64))
        c = np.zeros((degree_count,) + value.shape)
        c[0] = value
        return cls(c)

    @classmethod
    def zeros(cls, degree_count, rows, cols):
        return cls(np.zeros((degree_count, rows, cols)))

    @classmethod
    def identity(cls, n, degree_count):
        return cls.constant(np.eye(n), degree_count)

    @classmethod
    def _wrap(cls, c):
        # internal fast path: c is a fresh float64 array owned by the caller
        obj = cls.__new__(cls)
        c.setflags(write=False)
        obj._c = c
        return obj

    # -- attributes --
    @property
    def coeffs(self):
        return self._c

    @property
    def degree_count(self):
        return self._c.shape[0]

    @property
    def rows(self):
        return self._c.shape[1]

    @property
    def cols(self):
        return self._c.shape[2]

    @property
    def shape(self):
        return self._c.shape[1:]

    @property
    def is_scalar(self):
        return self.shape == (1, 1)

    @property
    def T(self):
        return tp_transpose(self)

    def coeff(self, d):
        return self._c[d]

    def truncate(self, degree_count):
        if not 1 <= degree_count <= self.degree_count:
            raise DegreeError(
                f"cannot truncate degree count {self.degree_count} to {degree_count}")
        return TaylorMatrix._wrap(self._c[:degree_count].copy())

    def extend(self, degree_count):
        """Pad with zero coefficients up to ``degree_count``."""
        if degree_count < self.degree_count:
            raise DegreeError(
                f"cannot extend degree count {self.degree_count} to {degree_count}")
        c = np.zeros((degree_count,) + self.shape)
        c[: self.degree_count] = self._c
        return TaylorMatrix._wrap(c)

    def max_abs(self):
        return float(np.max(np.abs(self._c)))

    # -- operators --
    def __add__(self, other):
        return tp_add(self, _coerce(other, self))

    def __radd__(self, other):
        return tp_add(_coerce(other, self), self)

    def __sub__(self, other):
        return tp_sub(self, _coerce(other, self))

    def __rsub__(self, other):
        return tp_sub(_coerce(other, self), self)

    def __neg__(self):
        return tp_neg(self)

    def __matmul__(self, other):
        return tp_mul(self, other)

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return tp_smul(other, self)
        if isinstance(other, TaylorMatrix):
            if other.is_scalar:
                return tp_smul(other, self)
            if self.is_scalar:
                return tp_smul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TaylorMatrix):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(np.array_equal(self._c, other._c))

    __hash__ = None

    def __repr__(self):
        return f"TaylorMatrix(D={self.degree_count}, shape={self.shape})"


TaylorScalar = TaylorMatrix


def taylor_scalar(coeffs):
    """1x1 Taylor polynomial from a sequence of real coefficients."""
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1, 1, 1)
    return TaylorMatrix(c)


def _coerce(other, like):
    if isinstance(other, TaylorMatrix):
        return other
    if isinstance(other, numbers.Real):
        return TaylorMatrix.constant(np.full(like.shape, float(other)), like.degree_count)
    raise TypeError(f"unsupported operand {type(other).__name__}")


def _check_degree(x, y):
    if x.degree_count != y.degree_count:
        raise DegreeError(
            f"degree counts differ: {x.degree_count} vs {y.degree_count}")


def _check_same_shape(x, y):
    if x.shape != y.shape:
        raise ShapeError(f"shapes differ: {x.shape} vs {y.shape}")


# -- ring arithmetic ----------------------------------------------------------

def tp_add(x, y):
    _check_same_shape(x, y)
    _check_degree(x, y)
    return TaylorMatrix._wrap(x.coeffs + y.coeffs)


def tp_sub(x, y):
    _check_same_shape(x, y)
    _check_degree(x, y)
    return TaylorMatrix._wrap(x.coeffs - y.coeffs)


def tp_neg(x):
    return TaylorMatrix._wrap(-x.coeffs)


def tp_mul(x, y):
    """Matrix product truncated after ``D`` coefficients."""
    if x.cols != y.rows:
        raise ShapeError(f"cannot multiply {x.shape} by {y.shape}")
    _check_degree(x, y)
    return TaylorMatrix._wrap(conv_window(x.coeffs, y.coeffs, 0, x.degree_count))


def tp_mul_window(x, y, lo, hi):
    """Coefficients ``lo..hi-1`` of the untruncated product ``x @ y``.

    Coefficients beyond either operand's degree count are treated as zero.
    """
    if x.cols != y.rows:
        raise ShapeError(f"cannot multiply {x.shape} by {y.shape}")
    if not (0 <= lo < hi <= x.degree_count + y.degree_count - 1):
        raise DegreeError(
            f"invalid window [{lo}, {hi}) for degree counts "
            f"{x.degree_count}, {y.degree_count}")
    return TaylorMatrix._wrap(conv_window(x.coeffs, y.coeffs, lo, hi))


def tp_transpose(x):
    return TaylorMatrix._wrap(np.ascontiguousarray(x.coeffs.transpose(0, 2, 1)))


def tp_trace(x):
    if x.rows != x.cols:
        raise ShapeError(f"trace of non-square {x.shape}")
    tr = np.trace(x.coeffs, axis1=1, axis2=2)
    return TaylorMatrix._wrap(tr.reshape(-1, 1, 1).copy())


def _scalar_conv(a, x):
    # a: (D,) scalar coefficients, x: (D, M, N); truncated convolution
    d_count = x.shape[0]
    out = np.zeros_like(x)
    for d in range(d_count):
        for c in range(d + 1):
            out[d] += a[c] * x[d - c]
    return out


def tp_hadamard(x, y):
    """Element-wise product; each entry is a truncated scalar convolution."""
    _check_same_shape(x, y)
    _check_degree(x, y)
    xc, yc = x.coeffs, y.coeffs
    out = np.zeros_like(xc)
    for d in range(x.degree_count):
        for c in range(d + 1):
            out[d] += xc[c] * yc[d - c]
    return TaylorMatrix._wrap(out)


def tp_smul(a, x):
    """Scalar (real or 1x1 Taylor polynomial) times matrix polynomial."""
    if isinstance(a, TaylorMatrix):
        if not a.is_scalar:
            raise ShapeError(f"scalar factor must be 1x1, got {a.shape}")
        _check_degree(a, x)
        return TaylorMatrix._wrap(_scalar_conv(a.coeffs[:, 0, 0], x.coeffs))
    if isinstance(a, numbers.Real):
        return TaylorMatrix._wrap(float(a) * x.coeffs)
    raise TypeError(f"unsupported scalar {type(a).__name__}")


def tp_reciprocal(x):
    """Element-wise reciprocal ``1 / x_ij`` of every entry polynomial."""
    xc = x.coeffs
    x0 = xc[0]
    if np.any(x0 == 0.0):
        raise ZeroDivisionError("zero degree-0 coefficient in reciprocal")
    out = np.zeros_like(xc)
    out[0] = 1.0 / x0
    for e in range(1, x.degree_count):
        acc = np.zeros_like(x0)
        for k in range(1, e + 1):
            acc += xc[k] * out[e - k]
        out[e] = -acc / x0
    return TaylorMatrix._wrap(out)


# -- inverse and linear solves -----------------------------------------------------

def _triangularity(c):
    """'upper', 'lower' or None for a coefficient stack of square matrices."""
    n = c.shape[1]
    if n == 1:
        return "upper"
    lo = np.tril_indices(n, -1)
    if not np.any(c[:, lo[0], lo[1]]):
        return "upper"
    if not np.any(c[:, lo[1], lo[0]]):
        return "lower"
    return None


def _check_pivots(pivots, a0):
    scale = float(np.max(np.abs(a0)))
    thresh = SINGULAR_FACTOR * EPS * scale
    if scale == 0.0 or np.min(np.abs(pivots)) <= thresh:
        raise SingularMatrixError(
            f"degree-0 coefficient is singular to working precision "
            f"(min pivot {np.min(np.abs(pivots)):.3e}, threshold {thresh:.3e})")


def _make_solver(a0, tri):
    if tri is not None:
        _check_pivots(np.diag(a0), a0)
        lower = tri == "lower"
        return lambda rhs: scipy.linalg.solve_triangular(a0, rhs, lower=lower)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a0, check_finite=False)
    _check_pivots(np.diag(lu), a0)
    return lambda rhs: scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def tp_solve(a, b):
    """Solve ``a @ x = b`` in the truncated ring.

    Triangular ``a`` (every coefficient upper, or every coefficient lower) is
    handled by substitution, so the triangular structure carries over to the
    result without fill-in.
    """
    if a.rows != a.cols:
        raise ShapeError(f"solve with non-square {a.shape}")
    if a.cols != b.rows:
        raise ShapeError(f"cannot solve {a.shape} against {b.shape}")
    _check_degree(a, b)
    ac, bc = a.coeffs, b.coeffs
    solve0 = _make_solver(ac[0], _triangularity(ac))
    out = np.zeros(bc.shape)
    for e in range(a.degree_count):
        rhs = bc[e].copy()
        for k in range(1, e + 1):
            rhs -= ac[k] @ out[e - k]
        out[e] = solve0(rhs)
    return TaylorMatrix._wrap(out)


def tp_inv(x):
    if x.rows != x.cols:
        raise ShapeError(f"inverse of non-square {x.shape}")
    return tp_solve(x, TaylorMatrix.identity(x.rows, x.degree_count))


# -- structural masks ------------------------------------------------------------

def mask_strict_lower(x):
    return TaylorMatrix._wrap(np.tril(x.coeffs, -1))


def mask_strict_upper(x):
    return TaylorMatrix._wrap(np.triu(x.coeffs, 1))


def mask_diag(x):
    if x.rows != x.cols:
        raise ShapeError(f"diagonal mask of non-square {x.shape}")
    n = x.rows
    out = np.zeros_like(x.coeffs)
    idx = np.arange(n)
    out[:, idx, idx] = x.coeffs[:, idx, idx]
    return TaylorMatrix._wrap(out)


def tp_eval(x, t):
    """Horner evaluation of the polynomial at a real ``t``."""
    c = x.coeffs
    acc = c[-1].copy()
    for d in range(x.degree_count - 2, -1, -1):
        acc = acc * t + c[d]
    return acc


# -- UTPM-TXT v1 ------------------------------------------------------------------

def dumps(x):
    d_count, m, n = x.coeffs.shape
    lines = [f"utpm {d_count} {m} {n}"]
    for d in range(d_count):
        if d:
            lines.append("")
        for row in x.coeffs[d]:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def loads(text):
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty UTPM-TXT document")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "utpm":
        raise ValueError(f"bad UTPM-TXT header: {lines[0]!r}")
    d_count, m, n = (int(v) for v in head[1:])
    rows = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(rows) != d_count * m:
        raise ValueError(f"expected {d_count * m} data rows, found {len(rows)}")
    if any(len(r) != n for r in rows):
        raise ValueError(f"every data row must hold {n} values")
    data = np.array([[float(v) for v in r] for r in rows]).reshape(d_count, m, n)
    return TaylorMatrix(data)


def save(path, x):
    with open(path, "w") as fh:
        fh.write(dumps(x))


def load(path):
    with open(path) as fh:
        return loads(fh.read())
