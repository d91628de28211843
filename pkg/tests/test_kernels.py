import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import brute_matmul_coeffs
from utpm import kernels
from utpm._accel import USE_NUMBA


@pytest.mark.parametrize("lo,hi", [(0, 3), (2, 5), (4, 5)])
def test_conv_backends_agree(rng, lo, hi):
    x = rng.standard_normal((3, 4, 5))
    y = rng.standard_normal((3, 5, 2))
    expected = brute_matmul_coeffs(x, y, 5)[lo:hi]
    np.testing.assert_allclose(kernels.conv_window_numpy(x, y, lo, hi), expected, atol=1e-13)
    np.testing.assert_allclose(kernels.conv_window_numba(x, y, lo, hi), expected, atol=1e-13)


def test_conv_empty_window_rows(rng):
    x = rng.standard_normal((1, 2, 2))
    out = kernels.conv_window_numpy(x, x, 1, 2)
    assert out.shape == (1, 2, 2) and not np.any(out)


@pytest.mark.parametrize("impl", [kernels.householder_qr_numba, kernels.householder_qr_numpy])
@pytest.mark.parametrize("shape", [(6, 3), (5, 5), (1, 1), (100, 5)])
def test_householder_backends(rng, impl, shape):
    a = rng.standard_normal(shape)
    q, r = impl(a)
    assert q.shape == shape and r.shape == (shape[1], shape[1])
    np.testing.assert_allclose(q @ r, a, atol=1e-13 * np.abs(a).max())
    np.testing.assert_allclose(q.T @ q, np.eye(shape[1]), atol=1e-13)
    assert not np.any(np.tril(r, -1))
    assert np.all(np.diag(r) > 0)


def test_householder_backends_agree(rng):
    a = rng.standard_normal((8, 4))
    q1, r1 = kernels.householder_qr_numba(a)
    q2, r2 = kernels.householder_qr_numpy(a)
    np.testing.assert_allclose(q1, q2, atol=1e-13)
    np.testing.assert_allclose(r1, r2, atol=1e-13)


@pytest.mark.parametrize("impl", [kernels.jacobi_eigh_numba, kernels.jacobi_eigh_numpy])
def test_jacobi_backends(rng, impl):
    a = rng.standard_normal((7, 7))
    a = a + a.T
    w, v, ok = impl(a, 60)
    assert ok
    np.testing.assert_allclose(v.T @ a @ v, np.diag(w), atol=1e-13 * np.abs(a).max())
    np.testing.assert_allclose(np.sort(w), np.linalg.eigvalsh(a), atol=1e-13)


def test_jacobi_reports_non_convergence(rng):
    a = rng.standard_normal((6, 6))
    a = a + a.T
    assert not kernels.jacobi_eigh_numpy(a, 0)[2]
    assert not kernels.jacobi_eigh_numba(a, 0)[2]


def test_jacobi_diagonal_input_untouched():
    w, v, ok = kernels.jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
    assert ok
    np.testing.assert_array_equal(w, [3.0, 1.0, 2.0])
    np.testing.assert_array_equal(v, np.eye(3))


def _backend_in_subprocess(flag):
    env = dict(os.environ, UTPM_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import utpm; print(utpm.backend_name())"],
        env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_env_flag_selects_backend():
    assert _backend_in_subprocess("1") == "numpy"
    assert _backend_in_subprocess("") == "numba"
    assert USE_NUMBA == (os.environ.get("UTPM_DISABLE_NUMBA", "") not in ("1", "true", "yes", "on"))
