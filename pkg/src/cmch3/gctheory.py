"""Closed-form geometry: Gauss-Codazzi residuals, spectral deformations,
Lax matrices, the adjusted Maurer-Cartan form and the beta-forms.

Point-wise builders broadcast over numpy arrays, so the same call works for
a single point or a whole grid of (u, u_z, H, Q) values.  Matrices come back
with shape (..., 2, 2).
"""
from dataclasses import dataclass, replace

import numpy as np

from . import wirtinger
from .errors import DomainError, InfiniteMeanCurvature
from .linalg2c import SIGMA, dagger


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid; node (iy, ix) sits at x0 + ix*hx + i(y0 + iy*hy)."""

    x0: float
    y0: float
    hx: float
    hy: float
    nx: int
    ny: int

    @classmethod
    def centered(cls, center=0j, half_widths=(0.5, 0.5), n=(65, 65)):
        cx, cy = complex(center).real, complex(center).imag
        wx, wy = half_widths
        nx, ny = n
        if nx < 3 or ny < 3:
            raise ValueError("grid needs at least 3x3 nodes")
        return cls(cx - wx, cy - wy, 2 * wx / (nx - 1), 2 * wy / (ny - 1), nx, ny)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def x(self):
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def y(self):
        return self.y0 + self.hy * np.arange(self.ny)

    @property
    def z(self):
        X, Y = np.meshgrid(self.x, self.y)
        return X + 1j * Y

    def refined(self):
        """Grid with half the spacing covering the same rectangle."""
        return Grid(self.x0, self.y0, self.hx / 2, self.hy / 2, 2 * self.nx - 1, 2 * self.ny - 1)

    def origin_index(self, tol=1e-9):
        ix = -self.x0 / self.hx
        iy = -self.y0 / self.hy
        rx, ry = round(ix), round(iy)
        if abs(ix - rx) > tol or abs(iy - ry) > tol or not (0 <= rx < self.nx and 0 <= ry < self.ny):
            raise ValueError("z = 0 is not a grid node")
        return int(ry), int(rx)


@dataclass(frozen=True)
class SurfaceTriple:
    """Metric log-factor u (e^{2u} dz dzbar), constant H, Hopf coefficient Q."""

    u: np.ndarray
    H: float
    Q: np.ndarray


@dataclass(frozen=True)
class DeformParams:
    s: float
    theta: complex
    a: float = 1.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("s must be positive")
        if abs(abs(self.theta) - 1.0) > 1e-12:
            raise DomainError("theta must lie on the unit circle")
        if not self.a > 0:
            raise DomainError("a must be positive")

    @property
    def lam(self):
        return self.s * self.theta


# ------------------------------------------------------------ Gauss-Codazzi


def gc_residual(t, grid, order=2):
    """Residual fields of u_{z zbar} - e^{2u}(1-H^2)/4 - e^{-2u}|Q|^2 and of Q_zbar."""
    u = np.asarray(t.u, dtype=float)
    Q = np.asarray(t.Q, dtype=complex)
    if u.shape != grid.shape or Q.shape != grid.shape:
        raise ValueError("fields must match the grid shape")
    if grid.nx < 3 or grid.ny < 3:
        raise ValueError("grid too small for central differences (need 3x3)")
    u_zzb = wirtinger.d_dz_dzbar(u, grid.hx, grid.hy, order)
    gauss = u_zzb - 0.25 * np.exp(2 * u) * (1 - t.H ** 2) - np.exp(-2 * u) * np.abs(Q) ** 2
    codazzi = wirtinger.d_dzbar(Q, grid.hx, grid.hy, order)
    return gauss, codazzi


# -------------------------------------------------------------- deformations


def deformation_factor(H, s):
    plus, minus = s * (1 + H), (1 - H) / s
    den = plus + minus
    if abs(den) <= 1e-12 * (abs(plus) + abs(minus)):
        raise InfiniteMeanCurvature(f"s-deformation with s={s!r} sends H={H!r} to infinity")
    return den / 2, (plus - minus) / den


def s_deform(t, s):
    """Strongly conformal s-deformation: returns (deformed triple, k)."""
    if not s > 0:
        raise DomainError("s must be positive")
    k, Hs = deformation_factor(t.H, s)
    u = np.asarray(t.u, dtype=float)
    return SurfaceTriple(u + np.log(abs(k)), Hs, k * np.asarray(t.Q)), k


def theta_deform(t, theta):
    """Associate-family rotation Q -> theta^-2 Q."""
    if abs(abs(theta) - 1) > 1e-12:
        raise DomainError("theta must have modulus one")
    return replace(t, Q=np.asarray(t.Q) / theta ** 2)


def proper_s(H):
    if H in (1, -1) or abs(1 + H) == 0 or abs(1 - H) == 0:
        raise DomainError("proper deformation undefined for H = +-1")
    return abs(1 - H) / abs(1 + H)


def unitarizing_s(H):
    if not abs(H) > 1:
        raise DomainError(f"|H| must exceed 1, got H={H!r}")
    return float(np.sqrt((H - 1) / (H + 1)))


def h_of_a(a):
    """Mean curvature (a^2+1)/(a^2-1) produced by the beta-form parameter a."""
    if not a > 0:
        raise DomainError("a must be positive")
    if a == 1:
        raise DomainError("a = 1 is a pole of the mean-curvature formula")
    return (a * a + 1) / (a * a - 1)


def h_of_a_proof(a):
    """The reciprocal candidate (a^2-1)/(a^2+1)."""
    if not a > 0:
        raise DomainError("a must be positive")
    return (a * a - 1) / (a * a + 1)


def s_of_a(a, H):
    if not a > 0:
        raise DomainError("a must be positive")
    return a * unitarizing_s(H)


# ---------------------------------------------------------------- Lax pairs


def _mats(*entries):
    m11, m12, m21, m22 = np.broadcast_arrays(*[np.asarray(e, dtype=complex) for e in entries])
    out = np.empty(m11.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = m11, m12, m21, m22
    return out


def lax_pair(u, u_z, u_zb, H, Q, Qbar, s, theta):
    """Lax matrices A(s, theta), B(s, theta) of the deformed frame."""
    eu, emu = np.exp(u), np.exp(-np.asarray(u))
    A = _mats(0.5 * u_z, 0.5 * s * eu * (1 + H), -emu * Q / theta ** 2, -0.5 * np.asarray(u_z))
    B = _mats(-0.5 * np.asarray(u_zb), emu * theta ** 2 * Qbar, 0.5 / s * eu * (1 - H), 0.5 * u_zb)
    return A, B


def lax_pair_conjugated(u, u_z, u_zb, H, Q, Qbar, s, theta):
    """Lax matrices after conjugation into twisted-loop form."""
    eu, emu = np.exp(u), np.exp(-np.asarray(u))
    A = _mats(-0.5 * np.asarray(u_z), -emu * Q / theta, 0.5 * s * eu * (1 + H) / theta, 0.5 * u_z)
    B = _mats(0.5 * u_zb, theta * 0.5 / s * eu * (1 - H), theta * emu * Qbar, -0.5 * np.asarray(u_zb))
    return A, B


def conjugator(theta):
    """The z-independent matrix i [[0, theta^(1/2)], [theta^(-1/2), 0]].

    Uses the principal square root; the conjugation result does not depend on
    the branch.  Not a twisted loop, so it is only ever used point-wise.
    """
    r = np.sqrt(complex(theta))
    return 1j * np.array([[0, r], [1 / r, 0]], dtype=complex)


def conjugate(X, G):
    return np.linalg.inv(G) @ X @ G


def adjusted_mc(u, u_z, u_zb, H, Q, Qbar, theta):
    """su(2)-valued adjusted Maurer-Cartan form: (dz part, dzbar part)."""
    if np.any(np.abs(np.asarray(H)) <= 1):
        raise DomainError("adjusted form needs |H| > 1")
    if abs(abs(theta) - 1) > 1e-12:
        raise DomainError("theta must lie on the unit circle")
    if np.iscomplexobj(u) and np.any(np.imag(u) != 0):
        raise DomainError("u must be real")
    eu, emu = np.exp(np.real(u)), np.exp(-np.real(u))
    r = 0.5 * eu * np.sqrt(np.asarray(H, dtype=float) ** 2 - 1)
    A = _mats(-0.5 * np.asarray(u_z), -emu * Q / theta, r / theta, 0.5 * u_z)
    B = _mats(0.5 * u_zb, -theta * r, theta * emu * Qbar, -0.5 * np.asarray(u_zb))
    return A, B


# -------------------------------------------------------------- beta-forms

_LOWER = SIGMA[0] - SIGMA[3]  # diag(0, 2)
_UPPER = SIGMA[0] + SIGMA[3]  # diag(2, 0)


def beta_forms(omega1_dz, omega1_dzb, a):
    """Lower-left (dz) and upper-right (dzbar) corrections for parameter a.

    Inputs are the off-diagonal theta^-1 part of the dz-component and the
    theta^+1 part of the dzbar-component (any matrices: the projector
    sandwich discards everything else).
    """
    if not a > 0:
        raise DomainError("a must be positive")
    b1 = 0.25 * (a - 1) * (_LOWER @ np.asarray(omega1_dz) @ _UPPER)
    b2 = 0.25 * (1 / a - 1) * (_UPPER @ np.asarray(omega1_dzb) @ _LOWER)
    return b1, b2


def omega_a(omega_dz, omega_dzb, a):
    """Omega(a) = adjusted form + beta-forms, at a fixed theta."""
    b1, b2 = beta_forms(omega_dz, omega_dzb, a)
    return np.asarray(omega_dz) + b1, np.asarray(omega_dzb) + b2


def flatness_residual(A, B, grid, order=2):
    """Field of A_zbar - B_z - [A, B] for a connection A dz + B dzbar."""
    A_zb = wirtinger.d_dzbar(A, grid.hx, grid.hy, order)
    B_z = wirtinger.d_dz(B, grid.hx, grid.hy, order)
    return A_zb - B_z - (A @ B - B @ A)


def is_su2_form(A, B):
    """Deviation of dzbar-part from -(dz-part)^dagger."""
    return float(np.max(np.abs(np.asarray(B) + dagger(np.asarray(A)))))
