"""2x2 complex matrices and the Hermitian model of Minkowski space.

A point x = (x0, x1, x2, x3) of R^{3,1} is identified with the Hermitian
matrix [[x0 + x3, x1 + i x2], [x1 - i x2, x0 - x3]], so det X = -<x, x>.
Hyperbolic space is the set of positive Hermitian matrices of determinant
one, with SL(2, C) acting by X -> g X g^*.

Note the sign of sigma_2: it is [[0, i], [-i, 0]], the negative of the
usual physics convention.  With this sign the identification above is
simply X = x0 s0 + x1 s1 + x2 s2 + x3 s3; with the physics sign the x2
term would flip.
"""
from dataclasses import dataclass

import numpy as np

from .errors import HermitianError

HERMITIAN_TOL = 1e-9

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
SIGMA.setflags(write=False)

IDENTITY = SIGMA[0]
E12 = np.array([[0, 1], [0, 0]], dtype=np.complex128)
E21 = np.array([[0, 0], [1, 0]], dtype=np.complex128)


def pauli(i):
    if i not in (0, 1, 2, 3):
        raise IndexError(f"Pauli index must be 0..3, got {i!r}")
    return SIGMA[i].copy()


def mat(m11, m12, m21, m22):
    return np.array([[m11, m12], [m21, m22]], dtype=np.complex128)


def dagger(X):
    return np.conj(np.swapaxes(X, -1, -2))


def det(X):
    X = np.asarray(X)
    return X[..., 0, 0] * X[..., 1, 1] - X[..., 0, 1] * X[..., 1, 0]


def adj(X):
    """Adjugate, batched over leading axes."""
    X = np.asarray(X)
    out = np.empty(X.shape, dtype=np.complex128)
    out[..., 0, 0] = X[..., 1, 1]
    out[..., 1, 1] = X[..., 0, 0]
    out[..., 0, 1] = -X[..., 0, 1]
    out[..., 1, 0] = -X[..., 1, 0]
    return out


def inv(X):
    return adj(X) / det(X)[..., None, None]


def frob(X):
    return np.sqrt(np.sum(np.abs(np.asarray(X)) ** 2, axis=(-2, -1)))


def to_hermitian(v):
    """Lorentz 4-vector(s) (..., 4) -> Hermitian matrices (..., 2, 2)."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 4:
        raise ValueError("Lorentz vectors need 4 components")
    x0, x1, x2, x3 = np.moveaxis(v, -1, 0)
    X = np.empty(v.shape[:-1] + (2, 2), dtype=np.complex128)
    X[..., 0, 0] = x0 + x3
    X[..., 0, 1] = x1 + 1j * x2
    X[..., 1, 0] = x1 - 1j * x2
    X[..., 1, 1] = x0 - x3
    return X


def hermitian_deviation(X):
    """||X - X^*|| / (1 + ||X||), batched."""
    X = np.asarray(X, dtype=np.complex128)
    return frob(X - dagger(X)) / (1.0 + frob(X))


def from_hermitian(X, tol=HERMITIAN_TOL):
    X = np.asarray(X, dtype=np.complex128)
    dev = np.max(hermitian_deviation(X)) if X.size else 0.0
    if dev > tol:
        raise HermitianError(f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.1e})")
    H = 0.5 * (X + dagger(X))
    a, d = H[..., 0, 0].real, H[..., 1, 1].real
    b = H[..., 0, 1]
    return np.stack([(a + d) / 2, b.real, b.imag, (a - d) / 2], axis=-1)


def minkowski_inner(X, Y):
    """Polarised determinant: <X, Y> = -tr(X adj Y) / 2.

    Real for Hermitian arguments; extended complex-bilinearly otherwise,
    which is what the Wirtinger-derivative formulas need.
    """
    X = np.asarray(X, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    val = -0.5 * np.einsum("...ij,...ji->...", X, adj(Y))
    return val


def lorentz_inner(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)


@dataclass(frozen=True)
class Check:
    """Outcome of a tolerance predicate; truthy when it passed."""

    ok: bool
    deviation: float

    def __bool__(self):
        return bool(self.ok)


def is_hermitian(X, tol=HERMITIAN_TOL):
    dev = float(np.max(hermitian_deviation(X)))
    return Check(dev <= tol, dev)


def is_sl2(X, tol=1e-9):
    dev = float(np.max(np.abs(det(X) - 1.0)))
    return Check(dev <= tol, dev)


def is_su2(X, tol=1e-9):
    X = np.asarray(X, dtype=np.complex128)
    unit = float(np.max(frob(X @ dagger(X) - IDENTITY)))
    dev = max(unit, float(np.max(np.abs(det(X) - 1.0))))
    return Check(dev <= tol, dev)


def is_traceless(X, tol=1e-9):
    X = np.asarray(X, dtype=np.complex128)
    dev = float(np.max(np.abs(X[..., 0, 0] + X[..., 1, 1])))
    return Check(dev <= tol, dev)


def poincare_ball(v):
    """Hyperboloid point(s) (x0, x1, x2, x3) -> Poincare ball coordinates."""
    v = np.asarray(v, dtype=float)
    return v[..., 1:] / (1.0 + v[..., :1])
