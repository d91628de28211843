import numpy as np
import pytest

from utpm import TaylorMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rand_poly(rng, d, m, n):
    return TaylorMatrix(rng.uniform(-1.0, 1.0, size=(d, m, n)))


def sym_poly(rng, d, n):
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    return TaylorMatrix(c + c.transpose(0, 2, 1))


def separated_sym(rng, d, n, gap=1.0):
    q0, _ = np.linalg.qr(rng.standard_normal((n, n)))
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    c = 0.5 * (c + c.transpose(0, 2, 1))
    a0 = q0 @ np.diag(gap * np.arange(1, n + 1)) @ q0.T
    c[0] = 0.5 * (a0 + a0.T)
    return TaylorMatrix(c)


def well_conditioned(rng, d, n):
    c = rng.uniform(-1.0, 1.0, size=(d, n, n))
    c[0] += n * np.eye(n)
    return TaylorMatrix(c)


# -- oracles independent of the library's convolution kernel ---------------------

def brute_matmul_coeffs(x, y, upto):
    """Untruncated product coefficients 0..upto-1 by scalar loops over entries."""
    dx, m, k = x.shape
    dy, _, n = y.shape
    out = np.zeros((upto, m, n))
    for d in range(upto):
        for i in range(m):
            for j in range(n):
                s = 0.0
                for c in range(dx):
                    if 0 <= d - c < dy:
                        for kk in range(k):
                            s += x[c, i, kk] * y[d - c, kk, j]
                out[d, i, j] = s
    return out


def central_diff(fn, h=1e-6):
    return (fn(h) - fn(-h)) / (2 * h)


def sign_align(ref, q):
    """Flip columns of ``q`` to match the orientation of ``ref``."""
    s = np.sign(np.sum(ref * q, axis=0))
    s[s == 0] = 1.0
    return q * s


def trace_pairing(xbar, xdot):
    """tr(xbar^T xdot) for plain matrices."""
    return float(np.sum(xbar * xdot))


def poly_pairing(xbar, xdot):
    """Truncated polynomial tr(xbar(t)^T xdot(t)) by brute-force convolution."""
    d = xbar.shape[0]
    out = np.zeros(d)
    for e in range(d):
        for c in range(e + 1):
            out[e] += np.sum(xbar[c] * xdot[e - c])
    return out
