"""Truncated twisted loops in SL(2, C).

A loop of degree N is stored as its Laurent coefficients c_j, j = -N..N,
in an array of shape (..., 2N+1, 2, 2).  Twisted loops carry diagonal
coefficients at even powers and off-diagonal ones at odd powers.  All
batched routines accept arbitrary leading axes so that whole grids of loops
are processed at once; :class:`Loop` wraps a single loop for interactive use.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import LoopError, LoopInversionError, NotInBigCell, SingularPoint
from .linalg2c import IDENTITY, dagger, det, frob, inv as inv2

DEFAULT_DEGREE = 16
DEFAULT_SAMPLES = 64


def degree_of(c):
    n = np.shape(c)[-3]
    if n % 2 != 1:
        raise LoopError(f"coefficient axis must have odd length, got {n}")
    return (n - 1) // 2


def circle(k=DEFAULT_SAMPLES):
    return np.exp(2j * np.pi * np.arange(k) / k)


def twist_mask(N):
    j = np.arange(-N, N + 1)
    even = (j % 2 == 0)
    m = np.zeros((2 * N + 1, 2, 2), dtype=bool)
    m[even, 0, 0] = m[even, 1, 1] = True
    m[~even, 0, 1] = m[~even, 1, 0] = True
    return m


def project_twisted(c):
    return np.where(twist_mask(degree_of(c)), c, 0.0)


def twist_defect(c):
    """Largest coefficient entry outside the twisted sparsity pattern."""
    off = np.where(twist_mask(degree_of(c)), 0.0, np.abs(c))
    return float(np.max(off)) if off.size else 0.0


def identity_coeffs(N, batch_shape=()):
    c = np.zeros(tuple(batch_shape) + (2 * N + 1, 2, 2), dtype=np.complex128)
    c[..., N, :, :] = IDENTITY
    return c


def constant_coeffs(X, N):
    X = np.asarray(X, dtype=np.complex128)
    c = np.zeros(X.shape[:-2] + (2 * N + 1, 2, 2), dtype=np.complex128)
    c[..., N, :, :] = X
    return c


def resize(c, N):
    """Pad with zeros or truncate to degree N."""
    M = degree_of(c)
    if N == M:
        return np.array(c, dtype=np.complex128)
    out = np.zeros(np.shape(c)[:-3] + (2 * N + 1, 2, 2), dtype=np.complex128)
    k = min(M, N)
    out[..., N - k:N + k + 1, :, :] = c[..., M - k:M + k + 1, :, :]
    return out


def _flat(c):
    c = np.asarray(c, dtype=np.complex128)
    return c.reshape((-1,) + c.shape[-3:]), c.shape[:-3]


def evaluate(c, theta):
    """Evaluate loops at theta (scalar or 1-D array of nonzero points)."""
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=np.complex128))
    if np.any(theta_arr == 0):
        raise ValueError("loops cannot be evaluated at theta = 0")
    flat, batch = _flat(c)
    vals = kernels.evaluate(flat, theta_arr)
    vals = vals.reshape(batch + (theta_arr.size, 2, 2))
    if np.ndim(theta) == 0:
        return vals[..., 0, :, :]
    return vals


def mul(a, b):
    """Truncated product; returns (coefficients, dropped-tail norm)."""
    a, b = np.broadcast_arrays(np.asarray(a, np.complex128), np.asarray(b, np.complex128))
    fa, batch = _flat(a)
    fb, _ = _flat(b)
    out, tail = kernels.convolve(fa, fb)
    return out.reshape(a.shape), tail.reshape(batch)


def star(c):
    """(g*)_j = (c_{-j})^dagger: the pointwise adjoint on the unit circle."""
    c = np.asarray(c, dtype=np.complex128)
    return dagger(c[..., ::-1, :, :])


def to_samples(c, k):
    """Values at the k-th roots of unity (k >= 2N+1)."""
    N = degree_of(c)
    if k < 2 * N + 1:
        raise ValueError("too few samples for the loop degree")
    arr = np.zeros(np.shape(c)[:-3] + (k, 2, 2), dtype=np.complex128)
    j = np.arange(-N, N + 1) % k
    arr[..., j, :, :] = c
    return k * np.fft.ifft(arr, axis=-3)


def from_samples(vals, N):
    """Inverse of :func:`to_samples`, aliasing folded into [-N, N]."""
    k = np.shape(vals)[-3]
    spec = np.fft.fft(vals, axis=-3) / k
    j = np.arange(-N, N + 1) % k
    out = spec[..., j, :, :]
    mask = np.ones(k, dtype=bool)
    mask[j] = False
    tail = np.sqrt(np.sum(np.abs(spec[..., mask, :, :]) ** 2, axis=(-3, -2, -1)))
    return out, tail


def _n_samples(N):
    k = 8
    while k < 8 * (2 * N + 1):
        k *= 2
    return k


def inv(c, cond_limit=1e12):
    """Pointwise inverse on the circle, returned as truncated coefficients."""
    N = degree_of(c)
    k = _n_samples(N)
    vals = to_samples(c, k)
    d = det(vals)
    norm2 = np.sum(np.abs(vals) ** 2, axis=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = norm2 / np.abs(d)
    worst = float(np.max(cond)) if cond.size else 0.0
    if not np.isfinite(worst) or worst > cond_limit:
        raise LoopInversionError(f"loop not invertible on the circle (condition ~ {worst:.3e})", condition=worst)
    out, tail = from_samples(inv2(vals), N)
    return project_twisted(out), tail


def coefficient(c, j):
    N = degree_of(c)
    if abs(j) > N:
        raise IndexError(f"coefficient index {j} outside [-{N}, {N}]")
    return np.asarray(c)[..., j + N, :, :]


def sup_distance(f, g, samples=DEFAULT_SAMPLES):
    """max over sampled theta of ||f(theta) - g(theta)|| (Frobenius)."""
    th = circle(samples)
    return float(np.max(frob(evaluate(f, th) - evaluate(g, th))))


def unitarity_defect(c, samples=DEFAULT_SAMPLES):
    vals = evaluate(c, circle(samples))
    return np.max(frob(vals @ dagger(vals) - IDENTITY), axis=-1)


def det_defect(c, samples=DEFAULT_SAMPLES):
    return np.max(np.abs(det(evaluate(c, circle(samples))) - 1.0), axis=-1)


# --------------------------------------------------------------- factorizations


def _series_inverse(w, N):
    """Taylor coefficients (powers 0..N) of inv(W) for W = sum w_j theta^j."""
    w = np.asarray(w)
    b = np.zeros(w.shape[:-3] + (N + 1, 2, 2), dtype=np.complex128)
    w0inv = inv2(w[..., 0, :, :])
    b[..., 0, :, :] = w0inv
    for k in range(1, N + 1):
        acc = np.zeros(w.shape[:-3] + (2, 2), dtype=np.complex128)
        for j in range(1, min(k, w.shape[-3] - 1) + 1):
            acc += b[..., k - j, :, :] @ w[..., j, :, :]
        b[..., k, :, :] = -acc @ w0inv
    return b


def _plus_to_laurent(p, N):
    out = np.zeros(p.shape[:-3] + (2 * N + 1, 2, 2), dtype=np.complex128)
    k = min(p.shape[-3], N + 1)
    out[..., N:N + k, :, :] = p[..., :k, :, :]
    return out


def iwasawa(phi, order=None):
    """Batched Iwasawa splitting phi = U * B with U unitary on the circle.

    B is holomorphic in the unit disk with constant term upper triangular
    and positive on the diagonal.  Computed as the outer spectral factor of
    star(phi)*phi via Cholesky of a block-Toeplitz section of size
    ``order + 1`` (default 2N).

    Returns ``(unitary, plus, ok, info)`` where ``ok`` marks loops whose
    Toeplitz section was positive definite and ``info`` carries diagnostic
    arrays (``pivot``, ``tail``).
    """
    phi = np.asarray(phi, dtype=np.complex128)
    N = degree_of(phi)
    order = 2 * N if order is None else int(order)
    flat, batch = _flat(phi)
    wide = resize(flat, 2 * N)
    P, _ = kernels.convolve(star(wide), wide)
    P = 0.5 * (P + star(P))
    w, ok, pivot = kernels.spectral_factor(P, order)
    D = max(N, order)
    wl = _plus_to_laurent(w, D)
    U, tail = kernels.convolve(resize(flat, D), wl)
    tail = tail + np.sqrt(np.sum(np.abs(U[:, :D - N]) ** 2 + np.abs(U[:, D + N + 1:]) ** 2, axis=(1, 2, 3)))
    U = resize(U, N)
    safe = np.where(ok[:, None, None, None], w, IDENTITY)
    B = _plus_to_laurent(_series_inverse(safe, N), N)
    U, B = project_twisted(U), project_twisted(B)
    U[~ok] = np.nan
    B[~ok] = np.nan
    shape = batch + (2 * N + 1, 2, 2)
    info = {"pivot": pivot.reshape(batch), "tail": tail.reshape(batch)}
    return U.reshape(shape), B.reshape(shape), ok.reshape(batch), info


def birkhoff(L, cond_limit=1e10):
    """Batched Birkhoff splitting L = p_plus * inv(p_minus), p_minus(inf) = I.

    Solves the truncated Riemann-Hilbert system: the negative powers
    theta^-1..theta^-N of L * p_minus must vanish.  Returns
    ``(p_plus, p_minus, ok, info)``; ``info['cond']`` is the condition
    number of the block-Toeplitz system and ``info['tail']`` the norm of
    coefficients dropped by the truncation.
    """
    L = np.asarray(L, dtype=np.complex128)
    N = degree_of(L)
    flat, batch = _flat(L)
    nb = flat.shape[0]
    A = np.zeros((nb, 2 * N, 2 * N), dtype=np.complex128)
    rhs = np.zeros((nb, 2 * N, 2), dtype=np.complex128)
    for k in range(1, N + 1):
        rhs[:, 2 * (k - 1):2 * k] = -flat[:, N - k]
        for j in range(1, N + 1):
            A[:, 2 * (k - 1):2 * k, 2 * (j - 1):2 * j] = flat[:, N + j - k]
    cond = np.linalg.cond(A) if N else np.ones(nb)
    ok = np.isfinite(cond) & (cond < cond_limit)
    A_safe = np.where(ok[:, None, None], A, np.eye(2 * N))
    m = np.linalg.solve(A_safe, rhs)
    pm = np.zeros_like(flat)
    pm[:, N] = IDENTITY
    for j in range(1, N + 1):
        pm[:, N - j] = m[:, 2 * (j - 1):2 * j]
    pm = project_twisted(pm)
    wide_L, wide_pm = resize(flat, 2 * N), resize(pm, 2 * N)
    prod, _ = kernels.convolve(wide_L, wide_pm)
    pp = np.zeros_like(flat)
    pp[:, N:] = prod[:, 2 * N:3 * N + 1]
    neg = prod[:, :2 * N]
    tail = np.sqrt(np.sum(np.abs(prod[:, 3 * N + 1:]) ** 2, axis=(1, 2, 3)) + np.sum(np.abs(neg) ** 2, axis=(1, 2, 3)))
    pp = project_twisted(pp)
    pp[~ok] = np.nan
    pm[~ok] = np.nan
    shape = batch + (2 * N + 1, 2, 2)
    info = {"cond": cond.reshape(batch), "tail": tail.reshape(batch)}
    return pp.reshape(shape), pm.reshape(shape), ok.reshape(batch), info


def birkhoff_residual(L, pp, pm, samples=DEFAULT_SAMPLES):
    th = circle(samples)
    Lv, ppv, pmv = evaluate(L, th), evaluate(pp, th), evaluate(pm, th)
    return np.max(frob(ppv @ inv2(pmv) - Lv), axis=-1)


def iwasawa_residual(phi, U, B, samples=DEFAULT_SAMPLES):
    th = circle(samples)
    return np.max(frob(evaluate(U, th) @ evaluate(B, th) - evaluate(phi, th)), axis=-1)


# ------------------------------------------------------------------- Loop type


@dataclass(frozen=True)
class SplitResultBirkhoff:
    p_plus: "Loop"
    p_minus: "Loop"
    residual: float


@dataclass(frozen=True)
class SplitResultIwasawa:
    unitary_part: "Loop"
    plus_part: "Loop"
    residual: float
    unitarity: float


@dataclass(frozen=True, eq=False)
class Loop:
    """Immutable truncated Laurent series sum_j c_j theta^j with 2x2 coefficients."""

    coeffs: np.ndarray
    tail: float = field(default=0.0)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 3 or c.shape[1:] != (2, 2):
            raise LoopError(f"loop coefficients must have shape (2N+1, 2, 2), got {c.shape}")
        degree_of(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def identity(cls, N=DEFAULT_DEGREE):
        return cls(identity_coeffs(N))

    @classmethod
    def constant(cls, X, N=DEFAULT_DEGREE):
        return cls(constant_coeffs(X, N))

    @classmethod
    def from_terms(cls, terms, N=DEFAULT_DEGREE):
        """Build from a mapping {power: 2x2 matrix}."""
        c = np.zeros((2 * N + 1, 2, 2), dtype=np.complex128)
        for j, X in terms.items():
            if abs(j) > N:
                raise LoopError(f"power {j} exceeds degree {N}")
            c[j + N] += np.asarray(X, dtype=np.complex128)
        return cls(c)

    @property
    def degree(self):
        return degree_of(self.coeffs)

    def __call__(self, theta):
        return evaluate(self.coeffs, theta)

    def coefficient(self, j):
        return coefficient(self.coeffs, j).copy()

    def __matmul__(self, other):
        if not isinstance(other, Loop):
            return NotImplemented
        N = max(self.degree, other.degree)
        c, tail = mul(resize(self.coeffs, N), resize(other.coeffs, N))
        return Loop(c, self.tail + other.tail + float(tail))

    def inv(self):
        c, tail = inv(self.coeffs)
        return Loop(c, self.tail + float(tail))

    def star(self):
        return Loop(star(self.coeffs), self.tail)

    def resized(self, N):
        return Loop(resize(self.coeffs, N), self.tail)

    def is_twisted(self, tol=0.0):
        return twist_defect(self.coeffs) <= tol

    def to_json(self):
        N = self.degree
        return json.dumps(
            {
                "degree": N,
                "tail": self.tail,
                "coefficients": {
                    str(j): [[[z.real, z.imag] for z in row] for row in self.coeffs[j + N]]
                    for j in range(-N, N + 1)
                    if np.any(self.coeffs[j + N] != 0)
                },
            }
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        N = data["degree"]
        c = np.zeros((2 * N + 1, 2, 2), dtype=np.complex128)
        for j, rows in data["coefficients"].items():
            c[int(j) + N] = [[complex(re, im) for re, im in row] for row in rows]
        return cls(c, data.get("tail", 0.0))


def _as_loop(x):
    return x if isinstance(x, Loop) else Loop(np.asarray(x, dtype=np.complex128))


def birkhoff_split(L, samples=DEFAULT_SAMPLES, tol=1e-6):
    """Checked single-loop Birkhoff splitting; accepts a Loop or coefficients."""
    L = _as_loop(L)
    pp, pm, ok, info = birkhoff(L.coeffs)
    if not ok:
        raise NotInBigCell(f"Birkhoff system ill-conditioned (cond {float(info['cond']):.3e})", residual=float("inf"))
    res = float(birkhoff_residual(L.coeffs, pp, pm, samples))
    if not np.isfinite(res) or res > tol:
        raise NotInBigCell(f"Birkhoff remultiplication residual {res:.3e} exceeds {tol:.1e}", residual=res)
    tail = L.tail + float(info["tail"])
    return SplitResultBirkhoff(Loop(pp, tail), Loop(pm, tail), res)


def iwasawa_split(phi, order=None, samples=DEFAULT_SAMPLES):
    """Checked single-loop Iwasawa splitting; accepts a Loop or coefficients."""
    phi = _as_loop(phi)
    U, B, ok, info = iwasawa(phi.coeffs, order)
    if not ok:
        raise SingularPoint("star(phi)*phi is not positive definite on the Toeplitz section",
                            min_eig=float(info["pivot"]))
    res = float(iwasawa_residual(phi.coeffs, U, B, samples))
    uni = float(unitarity_defect(U, samples))
    tail = phi.tail + float(info["tail"])
    return SplitResultIwasawa(Loop(U, tail), Loop(B, tail), res, uni)
