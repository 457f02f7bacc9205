import os
import subprocess
import sys

import numpy as np
import pytest

from cmch3 import _backend, kernels, loopalg

from conftest import random_twisted_loop

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def batch(rng, n=12, N=8):
    return np.stack([random_twisted_loop(rng, N) for _ in range(n)])


def test_convolve_numpy_matches_direct_sum(rng):
    a, b = batch(rng, 3, 4), batch(rng, 3, 4)
    out, tail = kernels.convolve_np(a, b)
    N = 4
    full = np.zeros((3, 4 * N + 1, 2, 2), complex)
    for i in range(2 * N + 1):
        for j in range(2 * N + 1):
            full[:, i + j] += a[:, i] @ b[:, j]
    np.testing.assert_allclose(out, full[:, N:3 * N + 1], atol=1e-14)
    dropped = np.concatenate([full[:, :N], full[:, 3 * N + 1:]], axis=1)
    np.testing.assert_allclose(tail, np.sqrt(np.sum(np.abs(dropped) ** 2, axis=(1, 2, 3))), atol=1e-12)


@needs_numba
def test_numba_twins_agree(rng):
    a, b = batch(rng), batch(rng)
    for x, y in zip(kernels.convolve_np(a, b), kernels.convolve_nb(a, b)):
        np.testing.assert_allclose(x, y, atol=1e-13)
    th = loopalg.circle(16).astype(complex)
    np.testing.assert_allclose(kernels.evaluate_np(a, th), kernels.evaluate_nb(a, th), atol=1e-13)
    wide = loopalg.resize(a, 16)
    P, _ = kernels.convolve_np(loopalg.star(wide), wide)
    w1, ok1, p1 = kernels.spectral_factor_np(P, 16)
    w2, ok2, p2 = kernels.spectral_factor_nb(P, 16)
    assert np.array_equal(ok1, ok2)
    np.testing.assert_allclose(w1, w2, atol=1e-10)
    np.testing.assert_allclose(p1, p2, rtol=1e-8)


def test_spectral_factor_flags_indefinite():
    P = np.zeros((1, 9, 2, 2), complex)
    P[0, 4] = np.diag([1.0, -1.0])
    w, ok, pivot = kernels.spectral_factor(P, 4)
    assert not ok[0]


def test_backend_flag_in_subprocess():
    code = "from cmch3 import _backend; print(_backend.backend_name())"
    env = dict(os.environ, CMCH3_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert _backend.backend_name() in ("numba", "numpy")


def test_njit_identity_when_disabled(monkeypatch):
    monkeypatch.setattr(_backend, "USE_NUMBA", False)
    f = lambda x: x + 1  # noqa: E731
    assert _backend.njit(f) is f
    assert _backend.njit(parallel=False)(f) is f
