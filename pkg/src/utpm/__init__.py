"""Univariate Taylor propagation of matrices (UTPM).

Forward mode pushes truncated Taylor polynomials with matrix coefficients
through matrix programs, including the thin QR and the symmetric
eigendecomposition. Reverse mode pulls adjoints back over a recorded graph
using the same formulas lifted to the polynomial ring.
"""
from ._accel import USE_NUMBA, backend_name
from .core import (
    DegreeError,
    ShapeError,
    SingularMatrixError,
    TaylorMatrix,
    TaylorScalar,
    dumps,
    load,
    loads,
    save,
    mask_diag,
    mask_strict_lower,
    mask_strict_upper,
    taylor_scalar,
    tp_add,
    tp_eval,
    tp_hadamard,
    tp_inv,
    tp_mul,
    tp_mul_window,
    tp_smul,
    tp_solve,
    tp_sub,
    tp_trace,
    tp_transpose,
)
from .graph import Graph, GraphError, OpKind
from .linalg import (
    DegenerateEigenvalues,
    EighFactors,
    NotSymmetricError,
    QrFactors,
    RankDeficientError,
    base_eigh,
    base_qr,
    eigh_extend,
    eigh_pushforward,
    qr_extend,
    qr_pushforward,
)

__version__ = "0.1.0"
