"""Hot numeric kernels on batched loop coefficient arrays.

Every kernel has a pure-numpy implementation (``*_np``) and, when numba is
importable and not disabled, an ``@njit`` twin (``*_nb``).  The public name
dispatches to whichever backend ``_backend.USE_NUMBA`` selects.

Coefficient layout: ``c[..., j + N, :, :]`` holds the 2x2 coefficient of
theta**j for j in [-N, N].
"""
import numpy as np

from ._backend import HAVE_NUMBA, USE_NUMBA, njit

# ---------------------------------------------------------------- convolution


def convolve_np(a, b):
    """Truncated Laurent product of two batches of loops.

    ``a`` and ``b`` have shape (B, n, 2, 2) with n = 2N+1.  Returns the
    product truncated to [-N, N] and the per-loop Frobenius norm of the
    discarded coefficients.
    """
    nb, n = a.shape[0], a.shape[1]
    full = np.zeros((nb, 2 * n - 1, 2, 2), dtype=np.complex128)
    for i in range(n):
        full[:, i:i + n] += np.einsum("bij,bkjl->bkil", a[:, i], b)
    half = (n - 1) // 2
    out = full[:, half:half + n].copy()
    dropped = np.concatenate([full[:, :half], full[:, half + n:]], axis=1)
    tail = np.sqrt(np.sum(np.abs(dropped) ** 2, axis=(1, 2, 3)))
    return out, tail


def _convolve_loop(a, b):
    nb, n = a.shape[0], a.shape[1]
    half = (n - 1) // 2
    out = np.zeros((nb, n, 2, 2), dtype=np.complex128)
    tail = np.zeros(nb)
    for p in range(nb):
        acc = np.zeros((2 * n - 1, 2, 2), dtype=np.complex128)
        for i in range(n):
            ai = a[p, i]
            if ai[0, 0] == 0 and ai[0, 1] == 0 and ai[1, 0] == 0 and ai[1, 1] == 0:
                continue
            for k in range(n):
                bk = b[p, k]
                for r in range(2):
                    for c in range(2):
                        acc[i + k, r, c] += ai[r, 0] * bk[0, c] + ai[r, 1] * bk[1, c]
        s = 0.0
        for m in range(2 * n - 1):
            if half <= m < half + n:
                out[p, m - half] = acc[m]
            else:
                for r in range(2):
                    for c in range(2):
                        s += acc[m, r, c].real ** 2 + acc[m, r, c].imag ** 2
        tail[p] = np.sqrt(s)
    return out, tail


# ----------------------------------------------------------------- evaluation


def evaluate_np(c, thetas):
    """Evaluate loops (B, n, 2, 2) at complex points (T,) -> (B, T, 2, 2)."""
    n = c.shape[1]
    half = (n - 1) // 2
    powers = np.asarray(thetas, dtype=np.complex128)[:, None] ** (np.arange(n) - half)[None, :]
    return np.einsum("tj,bjrc->btrc", powers, c)


def _evaluate_loop(c, thetas):
    nb, n = c.shape[0], c.shape[1]
    half = (n - 1) // 2
    nt = thetas.shape[0]
    out = np.zeros((nb, nt, 2, 2), dtype=np.complex128)
    for t in range(nt):
        th = thetas[t]
        pw = np.empty(n, dtype=np.complex128)
        for j in range(n):
            pw[j] = th ** (j - half)
        for p in range(nb):
            for j in range(n):
                for r in range(2):
                    for q in range(2):
                        out[p, t, r, q] += pw[j] * c[p, j, r, q]
    return out


# ------------------------------------------------ block-Toeplitz spectral factor


def _toeplitz_matrix(phat, order):
    # phat: (4N+1, 2, 2) for m = -2N..2N ; block (r, c) = phat[c - r]
    mid = (phat.shape[0] - 1) // 2
    size = 2 * (order + 1)
    T = np.zeros((size, size), dtype=np.complex128)
    for r in range(order + 1):
        for c in range(order + 1):
            m = c - r
            if -mid <= m <= mid:
                T[2 * r:2 * r + 2, 2 * c:2 * c + 2] = phat[m + mid]
    return T


def spectral_factor_np(phat, order):
    """Outer factor of a positive matrix function from its Fourier data.

    ``phat`` (B, 4N+1, 2, 2) are the coefficients of P = star(B)·B with B
    analytic in the disk.  Returns ``w`` (B, order+1, 2, 2), the Taylor
    coefficients of inv(B), the boolean ``ok`` mask (block Toeplitz section
    positive definite) and the smallest Cholesky pivot per loop.
    """
    nb = phat.shape[0]
    size = 2 * (order + 1)
    T = np.stack([_toeplitz_matrix(phat[p], order) for p in range(nb)]) if nb else np.zeros((0, size, size), complex)
    T = 0.5 * (T + np.conj(np.swapaxes(T, -1, -2)))
    ok = np.ones(nb, dtype=bool)
    pivot = np.zeros(nb)
    L = np.zeros_like(T)
    try:
        L[:] = np.linalg.cholesky(T)
    except np.linalg.LinAlgError:
        for p in range(nb):
            try:
                L[p] = np.linalg.cholesky(T[p])
            except np.linalg.LinAlgError:
                ok[p] = False
                L[p] = np.eye(size)
    diag = np.real(np.diagonal(L, axis1=-2, axis2=-1))
    pivot[:] = np.min(diag, axis=-1) ** 2 if size else 0.0
    pivot[~ok] = -1.0
    R = np.conj(np.swapaxes(L, -1, -2))
    rhs = np.zeros((nb, size, 2), dtype=np.complex128)
    rhs[:, -2, 0] = 1.0
    rhs[:, -1, 1] = 1.0
    y = np.linalg.solve(R, rhs)
    w = y.reshape(nb, order + 1, 2, 2)[:, ::-1].copy()
    w[~ok] = 0.0
    return w, ok, pivot


def _spectral_factor_loop(phat, order):
    nb = phat.shape[0]
    mid = (phat.shape[1] - 1) // 2
    size = 2 * (order + 1)
    w = np.zeros((nb, order + 1, 2, 2), dtype=np.complex128)
    ok = np.ones(nb, dtype=np.bool_)
    pivot = np.zeros(nb)
    for p in range(nb):
        T = np.zeros((size, size), dtype=np.complex128)
        for r in range(order + 1):
            for c in range(order + 1):
                m = c - r
                if -mid <= m <= mid:
                    for i in range(2):
                        for j in range(2):
                            T[2 * r + i, 2 * c + j] = phat[p, m + mid, i, j]
        # in-place lower Cholesky of the Hermitian part
        L = np.zeros((size, size), dtype=np.complex128)
        minpiv = np.inf
        good = True
        for j in range(size):
            s = T[j, j].real
            for k in range(j):
                s -= L[j, k].real ** 2 + L[j, k].imag ** 2
            if s <= 0.0:
                good = False
                break
            if s < minpiv:
                minpiv = s
            d = np.sqrt(s)
            L[j, j] = d
            for i in range(j + 1, size):
                acc = 0.5 * (T[i, j] + np.conj(T[j, i]))
                for k in range(j):
                    acc -= L[i, k] * np.conj(L[j, k])
                L[i, j] = acc / d
        if not good:
            ok[p] = False
            pivot[p] = -1.0
            continue
        pivot[p] = minpiv
        # back substitution: L^H y = e, for the last two unit columns
        for col in range(2):
            y = np.zeros(size, dtype=np.complex128)
            y[size - 2 + col] = 1.0
            for i in range(size - 1, -1, -1):
                acc = y[i]
                for k in range(i + 1, size):
                    acc -= np.conj(L[k, i]) * y[k]
                y[i] = acc / L[i, i].real
            for blk in range(order + 1):
                for r in range(2):
                    w[p, order - blk, r, col] = y[2 * blk + r]
    return w, ok, pivot


if HAVE_NUMBA:
    convolve_nb = njit(_convolve_loop)
    evaluate_nb = njit(_evaluate_loop)
    spectral_factor_nb = njit(_spectral_factor_loop)
else:  # pragma: no cover
    convolve_nb = evaluate_nb = spectral_factor_nb = None


def convolve(a, b):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    if USE_NUMBA:
        return convolve_nb(a, b)
    return convolve_np(a, b)


def evaluate(c, thetas):
    c = np.ascontiguousarray(c, dtype=np.complex128)
    thetas = np.ascontiguousarray(np.atleast_1d(thetas), dtype=np.complex128)
    if USE_NUMBA:
        return evaluate_nb(c, thetas)
    return evaluate_np(c, thetas)


def spectral_factor(phat, order):
    phat = np.ascontiguousarray(phat, dtype=np.complex128)
    if USE_NUMBA:
        return spectral_factor_nb(phat, int(order))
    return spectral_factor_np(phat, int(order))
