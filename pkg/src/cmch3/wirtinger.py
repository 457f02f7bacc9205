"""Finite-difference Wirtinger derivatives on uniform rectangular grids.

Fields are arrays indexed ``[iy, ix, ...]``; trailing axes (e.g. 2x2
matrices or loop coefficients) are carried along.  Central stencils are used
in the interior and shifted one-sided stencils of the same order near the
edges.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def fd_weights(offsets, deriv):
    """Fornberg's recursion: weights of ``deriv``-th derivative at 0."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    c = np.zeros((n, deriv + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, deriv)
        c2, c5, c4 = 1.0, c4, x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (x[i] * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = x[i] * c[j, 0] / c3
        c1 = c2
    return tuple(c[:, deriv])


def derivative(f, h, axis, deriv=1, order=2):
    """d^deriv f / dx^deriv along ``axis`` with formal accuracy ``order``."""
    f = np.asarray(f)
    n = f.shape[axis]
    width = 2 * ((deriv + 1) // 2) - 1 + order  # points in the central stencil
    half = width // 2
    if n < width:
        raise ValueError(f"need at least {width} points along axis {axis}, got {n}")
    f = np.moveaxis(f, axis, 0)
    out = np.empty(f.shape, dtype=np.result_type(f.dtype, float))
    for i in range(n):
        start = min(max(i - half, 0), n - width)
        if start == i - half:
            pts = tuple(range(-half, half + 1))
        else:
            # one extra point keeps one-sided stencils at the interior order
            width_b = width + 1 if width + 1 <= n else width
            start = min(max(i - half, 0), n - width_b)
            pts = tuple(range(start - i, start - i + width_b))
        w = fd_weights(pts, deriv)
        acc = 0.0
        for wk, p in zip(w, pts):
            acc = acc + wk * f[i + p]
        out[i] = acc
    out /= h ** deriv
    return np.moveaxis(out, 0, axis)


def d_dx(f, hx, order=2):
    return derivative(f, hx, axis=1, order=order)


def d_dy(f, hy, order=2):
    return derivative(f, hy, axis=0, order=order)


def d_dz(f, hx, hy, order=2):
    return 0.5 * (d_dx(f, hx, order) - 1j * d_dy(f, hy, order))


def d_dzbar(f, hx, hy, order=2):
    return 0.5 * (d_dx(f, hx, order) + 1j * d_dy(f, hy, order))


def d_dz_dzbar(f, hx, hy, order=2):
    """f_{z zbar} = Laplacian / 4."""
    return 0.25 * (derivative(f, hx, 1, 2, order) + derivative(f, hy, 0, 2, order))


def d_dz_dz(f, hx, hy, order=2):
    """f_{zz} = (f_xx - f_yy - 2i f_xy) / 4."""
    fxx = derivative(f, hx, 1, 2, order)
    fyy = derivative(f, hy, 0, 2, order)
    fxy = derivative(derivative(f, hx, 1, 1, order), hy, 0, 1, order)
    return 0.25 * (fxx - fyy - 2j * fxy)


def interior_mask(shape, margin=1):
    m = np.zeros(shape[:2], dtype=bool)
    m[margin:shape[0] - margin, margin:shape[1] - margin] = True
    return m
