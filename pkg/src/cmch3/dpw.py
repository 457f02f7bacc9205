"""Loop-group construction of the immersion from a normalized potential.

Pipeline (all loops truncated to degree N):

1. integrate dF_- = F_- theta^-1 P dz with F_-(0) = I;
2. Iwasawa-split F_- = F~ * B_+ node by node (F~ unitary on the circle);
3. differentiate F~ to get the adjusted form F~^-1 dF~ and its theta^-1
   (dz) and theta^+1 (dzbar) off-diagonal parts;
4. build the beta-forms for the chosen parameter a;
5. integrate the gauge G with G(0) = I, either
   * ``"gauge"``: G^-1 dG = F~ (beta' + beta'') F~^-1, or
   * ``"split"``: G_-^-1 dG_- = F~_0 beta' F~_0^-1,
     G_+^-1 dG_+ = F~_0 beta'' F~_0^-1, then L = G_-^-1 G_+ = p_+ p_-^-1
     and G = G_- p_+;
6. f = G G^*, extended frame F = G F~, normal F sigma_3 F^*.

The F_- and F~ fields live on a lattice refined once relative to the output
grid so that every RK4 step on the output grid has its midpoint data.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import gctheory, kernels, loopalg, wirtinger
from .gctheory import Grid
from .linalg2c import IDENTITY, SIGMA, dagger
from .potential import potential_field

log = logging.getLogger(__name__)

ROUTES = ("gauge", "split")


# ------------------------------------------------------------- loop products


def shift_mul(Y, X, power):
    """Y * (X theta^power) for loops Y (..., n, 2, 2) and matrices X (..., 2, 2)."""
    n = Y.shape[-3]
    X = np.asarray(X)[..., None, :, :]
    prod = Y @ X
    out = np.zeros_like(prod)
    if power >= 0:
        out[..., power:, :, :] = prod[..., :n - power, :, :]
        dropped = prod[..., n - power:, :, :]
    else:
        out[..., :n + power, :, :] = prod[..., -power:, :, :]
        dropped = prod[..., :-power, :, :]
    return out, np.sqrt(np.sum(np.abs(dropped) ** 2, axis=(-3, -2, -1)))


class ShiftRHS:
    """Right-multiplication by a single-power coefficient field."""

    def __init__(self, power):
        self.power = power

    def __call__(self, Y, M):
        return shift_mul(Y, M, self.power)


def loop_rhs(Y, M):
    return loopalg.mul(Y, M)


# --------------------------------------------------------------- integrators


def _clean(M):
    M = np.array(M, dtype=np.complex128)
    bad = ~np.isfinite(M)
    if np.any(bad):
        M[bad] = 0.0
    return M


def integrate_line(Y0, Mline, step, rhs, sub=1):
    """RK4 for Y' = Y M along one lattice line.

    ``Mline`` holds M at the lattice points (spacing step / (2 sub)), first
    axis along the path.  Returns Y at the node points (every 2*sub lattice
    points) and the accumulated truncation tail.
    """
    r = 2 * sub
    nsteps = (Mline.shape[0] - 1) // r
    Y = np.array(Y0, dtype=np.complex128)
    out = np.empty((nsteps + 1,) + Y.shape, dtype=np.complex128)
    tails = np.zeros((nsteps + 1,) + Y.shape[:-3])
    out[0] = Y
    tail = np.zeros(Y.shape[:-3])
    h = step / sub
    for s in range(nsteps):
        for q in range(sub):
            b = s * r + 2 * q
            M0, Mh, M1 = Mline[b], Mline[b + 1], Mline[b + 2]
            k1, t1 = rhs(Y, M0)
            k2, t2 = rhs(Y + 0.5 * h * k1, Mh)
            k3, t3 = rhs(Y + 0.5 * h * k2, Mh)
            k4, t4 = rhs(Y + h * k3, M1)
            Y = Y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            tail = tail + (abs(h) / 6.0) * (t1 + 2 * t2 + 2 * t3 + t4)
        out[s + 1] = Y
        tails[s + 1] = tail
    return out, tails


def _bidirectional(Y0, Mline, origin, r, step, rhs):
    """Integrate both ways from lattice index ``origin`` along a line."""
    sub = r // 2
    lo = origin % r
    fwd, tf = integrate_line(Y0, Mline[origin:], step, rhs, sub)
    back_line = Mline[lo:origin + 1][::-1]
    bwd, tb = integrate_line(Y0, back_line, -step, rhs, sub)
    Y = np.concatenate([bwd[:0:-1], fwd], axis=0)
    T = np.concatenate([tb[:0:-1], tf], axis=0)
    nfwd = (Mline.shape[0] - 1 - origin) // r
    return Y[: (origin - lo) // r + 1 + nfwd], T[: (origin - lo) // r + 1 + nfwd]


def integrate_field(Y0, Mx, My, origin, r, h_lattice, rhs, order="xy"):
    """Integrate dY = Y (Mx dx + My dy) from ``origin`` over a rectangle.

    ``Mx`` and ``My`` sit on a lattice (axes [iy, ix, ...]) with spacing
    ``h_lattice``; the output nodes are every ``r``-th lattice point in line
    with the origin.  ``order='xy'`` integrates the origin row first and then
    all columns; ``'yx'`` the origin column first and then all rows.
    Returns (Y, tail) on the node grid.
    """
    if r % 2:
        raise ValueError("lattice refinement must be even")
    oy, ox = origin
    step = r * h_lattice
    Mx, My = _clean(Mx), _clean(My)
    Y0 = np.asarray(Y0, dtype=np.complex128)
    xs = np.arange(ox % r, Mx.shape[1], r)
    ys = np.arange(oy % r, Mx.shape[0], r)
    if order == "xy":
        spine, spine_t = _bidirectional(Y0[None], Mx[oy, :, None], ox, r, step, rhs)
        cols = spine[:, 0]  # (nxn, n, 2, 2)
        line = np.swapaxes(My[:, xs], 0, 0)  # (Ly, nxn, ...)
        Y, T = _bidirectional(cols, line, oy, r, step, rhs)
        T = T + spine_t[:, 0][None, :]
        return Y, T
    if order == "yx":
        spine, spine_t = _bidirectional(Y0[None], My[:, ox, None], oy, r, step, rhs)
        rows = spine[:, 0]
        line = np.swapaxes(Mx[ys], 0, 1)  # (Lx, nyn, ...)
        Y, T = _bidirectional(rows, line, ox, r, step, rhs)
        T = T + spine_t[:, 0][None, :]
        return np.swapaxes(Y, 0, 1), np.swapaxes(T, 0, 1)
    raise ValueError(f"unknown integration order {order!r}")


def loop_l1(c):
    """sum_j ||c_j||: an upper bound of the sup-norm on the circle."""
    return np.sum(np.sqrt(np.sum(np.abs(c) ** 2, axis=(-2, -1))), axis=-1)


# ------------------------------------------------------------------ results


@dataclass
class FrameField:
    """Per-node loops and derived quantities on the output grid."""

    grid: Grid
    degree: int
    a: float
    mask: np.ndarray
    F_minus: np.ndarray
    F_tilde: np.ndarray
    F_tilde_plus: np.ndarray
    F_tilde_0: np.ndarray
    omega1_dz: np.ndarray
    omega1_dzb: np.ndarray
    omega0_dz: np.ndarray
    omega0_dzb: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    G: np.ndarray
    route: str
    G_minus: np.ndarray = None
    G_plus: np.ndarray = None
    G_split: np.ndarray = None
    G_gauge: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)
    poles: list = field(default_factory=list)

    @property
    def F(self):
        """Extended frame G * F~ as loops."""
        Fl, _ = loopalg.mul(self.G, self.F_tilde)
        return Fl


# -------------------------------------------------------------------- steps


def _lattice_potential(spec, H, grid, pole_threshold):
    P, poles = potential_field(spec, H, grid.z, pole_threshold)
    return P, poles


def integrate_Fminus(spec, H, grid, N, pole_threshold=1e-12, richardson=True):
    """Solve dF_- = F_- theta^-1 P dz on ``grid`` with F_-(0) = I.

    Returns (F_minus, info); info carries the pole mask, two-path discrepancy,
    Richardson error estimate and truncation tail.
    """
    lat = grid.refined()
    P, lat_poles = _lattice_potential(spec, H, lat, pole_threshold)
    oy, ox = lat.origin_index()
    rhs = ShiftRHS(-1)
    Y0 = loopalg.identity_coeffs(N)
    Fa, Ta = integrate_field(Y0, P, 1j * P, (oy, ox), 2, lat.hx, rhs, "xy")
    Fb, _ = integrate_field(Y0, P, 1j * P, (oy, ox), 2, lat.hx, rhs, "yx")
    node_poles = lat_poles[::2, ::2]
    ok = ~node_poles & np.all(np.isfinite(Fa), axis=(-3, -2, -1))
    disc = loop_l1(Fa - Fb)
    info = {
        "poles": node_poles,
        "pole_lattice_points": int(np.count_nonzero(lat_poles)),
        "path_discrepancy": float(np.max(disc[ok])) if np.any(ok) else float("nan"),
        "tail": Ta,
    }
    if richardson:
        lat2 = lat.refined()
        P2, _ = _lattice_potential(spec, H, lat2, pole_threshold)
        Fr, _ = integrate_field(Y0, P2, 1j * P2, lat2.origin_index(), 4, lat2.hx, rhs, "xy")
        err = loop_l1(Fr - Fa) / 15.0
        info["richardson"] = float(np.max(err[ok])) if np.any(ok) else float("nan")
    return Fa, info


def iwasawa_field(F_minus, order=None):
    """Node-wise Iwasawa splitting; returns (F~, F~_+, F~_0, ok, info)."""
    U, B, ok, info = loopalg.iwasawa(F_minus, order)
    N = loopalg.degree_of(F_minus)
    ok = ok & np.all(np.isfinite(U), axis=(-3, -2, -1))
    Fplus = np.full_like(U, np.nan)
    if np.any(ok):
        Fplus[ok], _ = loopalg.inv(B[ok])
    F0 = U[..., N, :, :].copy()
    return U, Fplus, F0, ok, info


def adjusted_mc_from_frame(F_tilde, grid, mask=None, order=4):
    """Adjusted form F~^-1 dF~ by finite differences.

    Returns a dict with loop-valued ``dz``/``dzb`` parts and the matrices
    ``omega1_dz`` (theta^-1 coefficient of dz part), ``omega1_dzb`` (theta^+1
    coefficient of dzbar part), ``omega0_dz``/``omega0_dzb``, plus the mask
    of nodes whose stencil touched a masked node.
    """
    N = loopalg.degree_of(F_tilde)
    Ft = np.where(np.isfinite(F_tilde), F_tilde, 0.0)
    Fx = wirtinger.derivative(Ft, grid.hx, axis=1, order=order)
    Fy = wirtinger.derivative(Ft, grid.hy, axis=0, order=order)
    S = loopalg.star(Ft)
    Ox, _ = loopalg.mul(S, Fx)
    Oy, _ = loopalg.mul(S, Fy)
    dz = 0.5 * (Ox - 1j * Oy)
    dzb = 0.5 * (Ox + 1j * Oy)
    bad = np.zeros(grid.shape, dtype=bool) if mask is None else ~mask
    reach = order // 2 + 1
    spread = bad.copy()
    for axis in (0, 1):
        acc = spread.copy()
        for k in range(1, reach + 1):
            acc |= np.roll(spread, k, axis=axis) | np.roll(spread, -k, axis=axis)
        spread = acc
    return {
        "dz": dz,
        "dzb": dzb,
        "omega1_dz": dz[..., N - 1, :, :],
        "omega1_dzb": dzb[..., N + 1, :, :],
        "omega0_dz": dz[..., N, :, :],
        "omega0_dzb": dzb[..., N, :, :],
        "mask": ~spread,
    }


def _conj(F0, X):
    return F0 @ X @ np.linalg.inv(F0)


def solve_G_pm(beta1, beta2, F0, grid, origin, N, r=2):
    """Split-route gauges G_- (dz system) and G_+ (dzbar system).

    ``beta1``, ``beta2`` and ``F0`` live on the lattice ``grid``; outputs are
    on every ``r``-th node, with the two-path discrepancy of each.
    """
    Mm = _conj(F0, beta1)
    Mp = _conj(F0, beta2)
    Y0 = loopalg.identity_coeffs(N)
    h = grid.hx
    out = {}
    for name, M, power, ysign in (("G_minus", Mm, -1, 1j), ("G_plus", Mp, 1, -1j)):
        rhs = ShiftRHS(power)
        Ga, _ = integrate_field(Y0, M, ysign * M, origin, r, h, rhs, "xy")
        Gb, _ = integrate_field(Y0, M, ysign * M, origin, r, h, rhs, "yx")
        out[name] = Ga
        out[name + "_path"] = loop_l1(Ga - Gb)
    return out


def _finite(c):
    return np.all(np.isfinite(c), axis=(-3, -2, -1))


def _safe_inv(c):
    good = _finite(c)
    out = np.full_like(c, np.nan)
    if np.any(good):
        out[good], _ = loopalg.inv(c[good])
    return out


def recombine(G_minus, G_plus, cond_limit=1e10):
    """L = G_-^-1 G_+ = p_+ p_-^-1 and G = G_- p_+, node by node.

    Nodes outside the big cell (Birkhoff system too ill-conditioned) get NaN.
    """
    L, _ = loopalg.mul(_safe_inv(G_minus), G_plus)
    good = _finite(L)
    pp = np.full_like(L, np.nan)
    pm = np.full_like(L, np.nan)
    cond = np.full(good.shape, np.inf)
    ok = np.zeros(good.shape, dtype=bool)
    if np.any(good):
        a, b, k, info = loopalg.birkhoff(L[good], cond_limit)
        pp[good], pm[good], ok[good], cond[good] = a, b, k, info["cond"]
    G, _ = loopalg.mul(G_minus, np.where(ok[..., None, None, None], pp, 0.0))
    G[~ok] = np.nan
    res = np.full(ok.shape, np.nan)
    if np.any(ok):
        res[ok] = loopalg.birkhoff_residual(L[ok], pp[ok], pm[ok])
    return G, ok, {"residual": res, "cond": cond}


def gauge_connection(beta1, beta2, F_tilde):
    """Loop-valued (Mx, My) with G^-1 dG = Mx dx + My dy on the gauge route."""
    Ft = np.where(np.isfinite(F_tilde), F_tilde, 0.0)
    S = loopalg.star(Ft)
    left1, _ = shift_mul(Ft, beta1, -1)
    left2, _ = shift_mul(Ft, beta2, 1)
    Mz, _ = loopalg.mul(left1, S)
    Mzb, _ = loopalg.mul(left2, S)
    return Mz + Mzb, 1j * (Mz - Mzb)


def solve_G_gauge(Mx, My, origin, h_lattice, r=2):
    """Integrate G^-1 dG = Mx dx + My dy on both paths; returns (G, info)."""
    N = loopalg.degree_of(Mx)
    Y0 = loopalg.identity_coeffs(N)
    Ga, Ta = integrate_field(Y0, Mx, My, origin, r, h_lattice, loop_rhs, "xy")
    Gb, _ = integrate_field(Y0, Mx, My, origin, r, h_lattice, loop_rhs, "yx")
    return Ga, {"path": loop_l1(Ga - Gb), "tail": Ta}


def path_taint(bad, origin, r):
    """Nodes whose row-then-column path crosses a flagged lattice point."""
    oy, ox = origin
    xs = np.arange(ox % r, bad.shape[1], r)
    ys = np.arange(oy % r, bad.shape[0], r)
    row = bad[oy]
    hit_x = np.array([row[min(x, ox):max(x, ox) + 1].any() for x in xs])
    col = np.zeros((ys.size, xs.size), dtype=bool)
    for j, x in enumerate(xs):
        c = bad[:, x]
        col[:, j] = [c[min(y, oy):max(y, oy) + 1].any() for y in ys]
    return col | hit_x[None, :]


def immerse(G, F_tilde, theta):
    """f = G G^*, F = G F~ and N = F sigma_3 F^* at one theta on the circle."""
    Gv = loopalg.evaluate(G, theta)
    Fv = Gv @ loopalg.evaluate(F_tilde, theta)
    f = Gv @ dagger(Gv)
    f = 0.5 * (f + dagger(f))  # exact Hermitian symmetry despite matmul rounding
    Nv = Fv @ SIGMA[3] @ dagger(Fv)
    return f, Fv, Nv


# ------------------------------------------------------------------ pipeline


def build_frame(spec, grid, N=16, order=None, route="gauge", tolerances=None,
                H_potential=None, richardson=True):
    """Run steps 1-5 on ``grid`` and return a :class:`FrameField`.

    ``H_potential`` is the H entering the normalized potential (defaults to
    ``spec.H``); the surface's mean curvature is then set by ``spec.a``.
    """
    if route not in ROUTES:
        raise ValueError(f"unknown route {route!r}")
    tol = dict(tolerances or {})
    thr = tol.get("pole_threshold", 1e-12)
    cond_limit = tol.get("birkhoff_cond", 1e10)
    H = spec.H if H_potential is None else H_potential
    diag = {}
    fine = grid.refined()
    o = grid.origin_index()
    of = fine.origin_index()

    Fm, finfo = integrate_Fminus(spec, H, fine, N, thr, richardson)
    diag["F_minus_path"] = finfo["path_discrepancy"]
    diag["F_minus_richardson"] = finfo.get("richardson", float("nan"))
    diag["F_minus_tail"] = float(np.nanmax(finfo["tail"]))
    poles_f = finfo["poles"]

    U, Fplus, F0, ok_iw, iinfo = iwasawa_field(Fm, order)
    valid_f = ok_iw & ~poles_f
    mc = adjusted_mc_from_frame(U, fine, valid_f, order=4)
    valid_f &= mc["mask"]
    b1, b2 = gctheory.beta_forms(mc["omega1_dz"], mc["omega1_dzb"], spec.a)
    b1 = np.where(valid_f[..., None, None], b1, 0.0)
    b2 = np.where(valid_f[..., None, None], b2, 0.0)

    good = valid_f & np.all(np.isfinite(U), axis=(-3, -2, -1))
    diag["unitarity"] = float(np.max(loopalg.unitarity_defect(U[good], 32))) if np.any(good) else float("nan")
    diag["iwasawa_pivot_min"] = float(np.nanmin(iinfo["pivot"]))

    Mx, My = gauge_connection(b1, b2, U)
    Gg, ginfo = solve_G_gauge(Mx, My, of, fine.hx, 2)
    mask = valid_f[::2, ::2] & _finite(Gg)
    diag["G_path"] = float(np.max(ginfo["path"][mask])) if np.any(mask) else float("nan")
    diag["G_tail"] = float(np.nanmax(ginfo["tail"]))
    if richardson:
        G2, _ = solve_G_gauge(Mx[::2, ::2], My[::2, ::2], o, grid.hx, 2)
        sub = Gg[o[0] % 2::2, o[1] % 2::2]
        err = loop_l1(G2 - sub) / 15.0
        m2 = mask[o[0] % 2::2, o[1] % 2::2]
        diag["G_richardson"] = float(np.max(err[m2])) if np.any(m2) else float("nan")

    pm = solve_G_pm(b1, b2, F0, fine, of, N)
    Gm, Gp = pm["G_minus"], pm["G_plus"]
    Gs, ok_b, binfo = recombine(Gm, Gp, cond_limit)
    sel = mask & ok_b
    diag["G_minus_path"] = float(np.max(pm["G_minus_path"][mask])) if np.any(mask) else float("nan")
    diag["G_plus_path"] = float(np.max(pm["G_plus_path"][mask])) if np.any(mask) else float("nan")
    diag["birkhoff_residual"] = float(np.nanmax(binfo["residual"])) if np.any(ok_b) else float("nan")
    diag["big_cell_failures"] = int(np.count_nonzero(mask & ~ok_b))
    diag["split_vs_gauge"] = float(np.max(loop_l1(Gs - Gg)[sel])) if np.any(sel) else float("nan")
    if route == "split":
        mask = sel
    G = Gs if route == "split" else Gg

    taint = path_taint(~valid_f, of, 2)
    poles = poles_f[::2, ::2]
    diag["masked_nodes"] = int(np.count_nonzero(~mask))
    diag["pole_nodes"] = int(np.count_nonzero(poles))
    diag["path_through_singular"] = int(np.count_nonzero(taint & mask))
    diag["singular_nodes"] = int(np.count_nonzero(~ok_iw[::2, ::2]))
    pole_list = [complex(z) for z in grid.z[poles]]

    c = lambda arr: arr[::2, ::2]
    return FrameField(
        grid=grid, degree=N, a=spec.a, mask=mask,
        F_minus=c(Fm), F_tilde=c(U), F_tilde_plus=c(Fplus), F_tilde_0=c(F0),
        omega1_dz=c(mc["omega1_dz"]), omega1_dzb=c(mc["omega1_dzb"]),
        omega0_dz=c(mc["omega0_dz"]), omega0_dzb=c(mc["omega0_dzb"]),
        beta1=c(b1), beta2=c(b2), G=G, route=route,
        G_minus=Gm, G_plus=Gp, G_split=Gs, G_gauge=Gg,
        diagnostics=diag, poles=pole_list,
    )
