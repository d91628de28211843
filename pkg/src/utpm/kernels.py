"""Hot numeric kernels.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorized numpy version. ``conv_window``, ``householder_qr`` and
``jacobi_eigh`` dispatch to one of them according to
:data:`utpm._accel.USE_NUMBA`. Both variants are importable directly so the
benchmark and the tests can compare them in a single process.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "conv_window",
    "householder_qr",
    "jacobi_eigh",
    "conv_window_numba",
    "conv_window_numpy",
    "householder_qr_numba",
    "householder_qr_numpy",
    "jacobi_eigh_numba",
    "jacobi_eigh_numpy",
]

JACOBI_MAX_SWEEPS = 60


# -- truncated matrix convolution ------------------------------------------------

@njit(cache=True)
def conv_window_numba(x, y, lo, hi):
    dx, m, kk = x.shape
    dy, _, n = y.shape
    out = np.zeros((hi - lo, m, n))
    for d in range(lo, hi):
        c0 = max(0, d - dy + 1)
        c1 = min(d, dx - 1)
        for c in range(c0, c1 + 1):
            for i in range(m):
                for k in range(kk):
                    xik = x[c, i, k]
                    for j in range(n):
                        out[d - lo, i, j] += xik * y[d - c, k, j]
    return out


def conv_window_numpy(x, y, lo, hi):
    dx, m, _ = x.shape
    dy, _, n = y.shape
    out = np.zeros((hi - lo, m, n))
    for d in range(lo, hi):
        c0 = max(0, d - dy + 1)
        c1 = min(d, dx - 1)
        if c0 > c1:
            continue
        cs = np.arange(c0, c1 + 1)
        out[d - lo] = np.matmul(x[cs], y[d - cs]).sum(axis=0)
    return out


# -- Householder QR (thin) -------------------------------------------------------

@njit(cache=True)
def householder_qr_numba(a):
    m, n = a.shape
    r = a.copy()
    vs = np.zeros((m, n))
    betas = np.zeros(n)
    for j in range(n):
        norm2 = 0.0
        for i in range(j, m):
            norm2 += r[i, j] * r[i, j]
        norm = np.sqrt(norm2)
        alpha = -norm if r[j, j] >= 0.0 else norm
        for i in range(j, m):
            vs[i, j] = r[i, j]
        vs[j, j] -= alpha
        vnorm2 = 0.0
        for i in range(j, m):
            vnorm2 += vs[i, j] * vs[i, j]
        beta = 2.0 / vnorm2 if vnorm2 > 0.0 else 0.0
        betas[j] = beta
        for k in range(j + 1, n):
            dot = 0.0
            for i in range(j, m):
                dot += vs[i, j] * r[i, k]
            dot *= beta
            for i in range(j, m):
                r[i, k] -= dot * vs[i, j]
        r[j, j] = alpha
        for i in range(j + 1, m):
            r[i, j] = 0.0

    q = np.zeros((m, n))
    for i in range(n):
        q[i, i] = 1.0
    for j in range(n - 1, -1, -1):
        beta = betas[j]
        if beta == 0.0:
            continue
        for k in range(n):
            dot = 0.0
            for i in range(j, m):
                dot += vs[i, j] * q[i, k]
            dot *= beta
            for i in range(j, m):
                q[i, k] -= dot * vs[i, j]

    for j in range(n):
        if r[j, j] < 0.0:
            for k in range(j, n):
                r[j, k] = -r[j, k]
            for i in range(m):
                q[i, j] = -q[i, j]
    return q, r[:n, :].copy()


def householder_qr_numpy(a):
    m, n = a.shape
    r = np.array(a, dtype=float)
    vs = []
    for j in range(n):
        x = r[j:, j]
        norm = np.sqrt(x @ x)
        alpha = -norm if x[0] >= 0.0 else norm
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        beta = 2.0 / vnorm2 if vnorm2 > 0.0 else 0.0
        vs.append((v, beta))
        if j + 1 < n:
            r[j:, j + 1:] -= beta * np.outer(v, v @ r[j:, j + 1:])
        r[j, j] = alpha
        r[j + 1:, j] = 0.0

    q = np.eye(m, n)
    for j in range(n - 1, -1, -1):
        v, beta = vs[j]
        if beta != 0.0:
            q[j:, :] -= beta * np.outer(v, v @ q[j:, :])

    r = r[:n, :]
    flip = np.diag(r) < 0.0
    r[flip, :] *= -1.0
    q[:, flip] *= -1.0
    return q, r


# -- cyclic Jacobi eigensolver ---------------------------------------------------

@njit(cache=True)
def jacobi_eigh_numba(a, max_sweeps):
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    fro2 = 0.0
    for i in range(n):
        for j in range(n):
            fro2 += a[i, j] * a[i, j]
    sweeps = 0
    while True:
        off2 = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off2 += 2.0 * a[p, q] * a[p, q]
        if off2 <= 1e-32 * fro2 or off2 == 0.0:
            break
        if sweeps >= max_sweeps:
            return np.diag(a).copy(), v, False
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v, True


def jacobi_eigh_numpy(a, max_sweeps):
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    fro2 = np.sum(a * a)
    iu = np.triu_indices(n, 1)
    sweeps = 0
    while True:
        off2 = 2.0 * np.sum(a[iu] ** 2)
        if off2 <= 1e-32 * fro2 or off2 == 0.0:
            break
        if sweeps >= max_sweeps:
            return np.diag(a).copy(), v, False
        sweeps += 1
        for p, q in zip(*iu):
            apq = a[p, q]
            if apq == 0.0:
                continue
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0.0 else 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            cols = a[:, [p, q]]
            a[:, p] = c * cols[:, 0] - s * cols[:, 1]
            a[:, q] = s * cols[:, 0] + c * cols[:, 1]
            rows = a[[p, q], :]
            a[p, :] = c * rows[0] - s * rows[1]
            a[q, :] = s * rows[0] + c * rows[1]
            a[p, q] = a[q, p] = 0.0
            vc = v[:, [p, q]]
            v[:, p] = c * vc[:, 0] - s * vc[:, 1]
            v[:, q] = s * vc[:, 0] + c * vc[:, 1]
    return np.diag(a).copy(), v, True


# -- dispatch --------------------------------------------------------------------

def conv_window(x, y, lo, hi):
    """Coefficients ``lo..hi-1`` of the untruncated product of two
    coefficient stacks of shape ``(D, M, K)`` and ``(D', K, N)``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if USE_NUMBA:
        return conv_window_numba(x, y, lo, hi)
    return conv_window_numpy(x, y, lo, hi)


def householder_qr(a):
    """Thin QR with non-negative diagonal of R; returns ``(q, r)``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if USE_NUMBA:
        return householder_qr_numba(a)
    return householder_qr_numpy(a)


def jacobi_eigh(a, max_sweeps=JACOBI_MAX_SWEEPS):
    """Unordered eigenpairs of a symmetric matrix by cyclic Jacobi sweeps.

    Returns ``(w, v, converged)``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if USE_NUMBA:
        return jacobi_eigh_numba(a, max_sweeps)
    return jacobi_eigh_numpy(a, max_sweeps)
