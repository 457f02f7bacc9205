"""Independent geometric checks of a computed immersion.

Everything here looks only at the point field f (Hermitian, det 1) and the
normal field N on the grid; no pipeline internals are consulted except for
the diagnostics that are copied verbatim into the report.
"""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gctheory, wirtinger
from .gctheory import SurfaceTriple
from .linalg2c import det, frob, hermitian_deviation, inv, minkowski_inner

PLUS, MINUS, NEITHER = "plus-candidate", "minus-candidate", "neither"


def candidates(a):
    """(plus, minus) mean-curvature candidates for parameter a."""
    a2 = a * a
    return (a2 + 1) / (a2 - 1), (a2 - 1) / (a2 + 1)


def _interior(mask, margin):
    """Unmasked nodes whose full stencil of half-width ``margin`` is unmasked."""
    m = np.asarray(mask, dtype=bool).copy()
    bad = ~m
    for axis in (0, 1):
        acc = bad.copy()
        for k in range(1, margin + 1):
            acc |= np.roll(bad, k, axis=axis) | np.roll(bad, -k, axis=axis)
        bad = acc
    out = ~bad
    out &= wirtinger.interior_mask(m.shape, margin)
    return out


@dataclass(frozen=True)
class HyperboloidCheck:
    det_deviation: float
    hermitian_deviation: float
    trace_positive: bool


def check_hyperboloid(f, mask=None):
    """det f = 1, Hermitian, positive trace over unmasked nodes."""
    f = np.asarray(f, dtype=np.complex128)
    m = np.ones(f.shape[:-2], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if not np.any(m):
        return HyperboloidCheck(float("nan"), float("nan"), False)
    fm = f[m]
    d = float(np.max(np.abs(det(fm) - 1)))
    h = float(np.max(hermitian_deviation(fm)))
    tr = np.trace(fm, axis1=-2, axis2=-1)
    return HyperboloidCheck(d, h, bool(np.all(tr.real > 0)))


@dataclass
class FundamentalForms:
    u: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    conformality: np.ndarray  # |<f_z, f_z>|
    normal_orthogonality: np.ndarray  # |<f_z, N>|
    mask: np.ndarray  # nodes with a usable stencil and positive metric


def recover_fundamental_forms(f, N, grid, mask=None, order=4):
    """u, Q, H from Wirtinger finite differences of f and the normal N.

    u = log(2 <f_z, f_zbar>) / 2, Q = <f_zz, N>, H = 2 e^{-2u} <f_zzbar, N>.
    """
    f = np.asarray(f, dtype=np.complex128)
    N = np.asarray(N, dtype=np.complex128)
    m = np.ones(grid.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    f = np.where(m[..., None, None], f, 0.0)
    hx, hy = grid.hx, grid.hy
    fz = wirtinger.d_dz(f, hx, hy, order)
    fzb = wirtinger.d_dzbar(f, hx, hy, order)
    fzz = wirtinger.d_dz_dz(f, hx, hy, order)
    fzzb = wirtinger.d_dz_dzbar(f, hx, hy, order)
    g = minkowski_inner(fz, fzb).real
    ok = _interior(m, order // 2 + 1) & (g > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(ok, 0.5 * np.log(np.where(g > 0, 2 * g, 1.0)), np.nan)
        Q = np.where(ok, minkowski_inner(fzz, N), np.nan)
        H = np.where(ok, 2 * np.exp(-2 * u) * minkowski_inner(fzzb, N).real, np.nan)
    conf = np.where(ok, np.abs(minkowski_inner(fz, fz)), np.nan)
    orth = np.where(ok, np.abs(minkowski_inner(fz, N)), np.nan)
    return FundamentalForms(u, Q, H, conf, orth, ok)


@dataclass(frozen=True)
class HTest:
    mean: float
    stdev: float
    rel_stdev: float
    decision: str
    plus: float
    minus: float
    distance_plus: float
    distance_minus: float
    count: int


def constant_H_test(H_est, a, mask=None, match_tol=1e-2, rel_tol=1e-3):
    """Compare the mean of H_est with the two candidates (up to sign).

    A decision is only made when the field is constant to ``rel_tol``
    (stdev / |mean|) and exactly one candidate lies within ``match_tol``.
    """
    H = np.asarray(H_est, dtype=float)
    m = np.isfinite(H) if mask is None else (np.asarray(mask, dtype=bool) & np.isfinite(H))
    vals = H[m]
    plus, minus = candidates(a)
    if vals.size < 9:
        return HTest(float("nan"), float("nan"), float("nan"), NEITHER, plus, minus,
                     float("nan"), float("nan"), int(vals.size))
    mean, sd = float(np.mean(vals)), float(np.std(vals))
    rel = sd / abs(mean) if mean else float("inf")
    dp, dm = abs(abs(mean) - abs(plus)), abs(abs(mean) - abs(minus))
    decision = NEITHER
    if rel <= rel_tol:
        hits = [name for name, d in ((PLUS, dp), (MINUS, dm)) if d <= match_tol]
        if len(hits) == 1:
            decision = hits[0]
    return HTest(mean, sd, rel, decision, plus, minus, dp, dm, int(vals.size))


def codazzi_test(Q_est, grid, mask=None, order=4):
    """max |dQ/dzbar| over interior nodes."""
    Q = np.asarray(Q_est, dtype=complex)
    m = np.isfinite(Q) if mask is None else (np.asarray(mask, dtype=bool) & np.isfinite(Q))
    r = np.abs(wirtinger.d_dzbar(np.where(m, Q, 0), grid.hx, grid.hy, order))
    inner = _interior(m, order // 2)
    return float(np.max(r[inner])) if np.any(inner) else float("nan")


def gauss_test(u_est, H, Q_est, grid, mask=None, order=4):
    """max |Gauss residual| of (u, H, Q) over interior nodes."""
    u = np.asarray(u_est, dtype=float)
    Q = np.asarray(Q_est, dtype=complex)
    m = np.isfinite(u) & np.isfinite(Q)
    if mask is not None:
        m &= np.asarray(mask, dtype=bool)
    t = SurfaceTriple(np.where(m, u, 0.0), H, np.where(m, Q, 0))
    gauss, _ = gctheory.gc_residual(t, grid, order)
    inner = _interior(m, order // 2)
    return float(np.max(np.abs(gauss[inner]))) if np.any(inner) else float("nan")


def flatness_test(A, B, grid, mask=None, order=4):
    """max Frobenius norm of A_zbar - B_z - [A, B] over interior nodes."""
    res = frob(gctheory.flatness_residual(A, B, grid, order))
    m = np.ones(grid.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    inner = _interior(m, order // 2)
    return float(np.max(res[inner])) if np.any(inner) else float("nan")


def frame_form(F, grid, mask=None, order=4):
    """(A, B) with F^-1 dF = A dz + B dzbar, by finite differences."""
    F = np.asarray(F, dtype=np.complex128)
    if mask is not None:
        F = np.where(np.asarray(mask)[..., None, None], F, np.eye(2))
    Fi = inv(F)
    return Fi @ wirtinger.d_dz(F, grid.hx, grid.hy, order), Fi @ wirtinger.d_dzbar(F, grid.hx, grid.hy, order)


@dataclass
class ThetaReport:
    theta: float  # angle of theta_eval
    det_deviation: float
    hermitian_deviation: float
    trace_positive: bool
    conformality: float
    normal_orthogonality: float
    u_mean: float
    u_spread: float
    Q_mean_re: float
    Q_mean_im: float
    H: dict
    gauss: float
    codazzi: float
    flatness: float


@dataclass
class VerifyReport:
    a: float
    det_deviation: float
    hermitian_deviation: float
    H_mean: float
    H_stdev: float
    H_rel_stdev: float
    decision: str
    candidates: dict
    gauss: float
    codazzi: float
    flatness: float
    unitarity: float
    path_dependence: float
    tail_budget: float
    associate_u: float = float("nan")
    associate_Q: float = float("nan")
    per_theta: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return _finite_json(asdict(self))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, **kw)


def _finite_json(obj):
    """Replace non-finite floats by strings so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def analyse_surface(f, F, N, grid, a, mask, tolerances=None):
    """Per-theta checks on (f, F, N); returns (ThetaReport, FundamentalForms)."""
    tol = tolerances or {}
    hyp = check_hyperboloid(f, mask)
    ff = recover_fundamental_forms(f, N, grid, mask)
    ht = constant_H_test(ff.H, a, ff.mask, tol.get("h_match", 1e-2), tol.get("h_rel_stdev", 1e-3))
    inner = ff.mask
    Hc = ht.mean if math.isfinite(ht.mean) else 0.0
    A, B = frame_form(F, grid, mask)
    rep = ThetaReport(
        theta=0.0,
        det_deviation=hyp.det_deviation,
        hermitian_deviation=hyp.hermitian_deviation,
        trace_positive=hyp.trace_positive,
        conformality=float(np.nanmax(ff.conformality)) if np.any(inner) else float("nan"),
        normal_orthogonality=float(np.nanmax(ff.normal_orthogonality)) if np.any(inner) else float("nan"),
        u_mean=float(np.nanmean(ff.u[inner])) if np.any(inner) else float("nan"),
        u_spread=float(np.ptp(ff.u[inner])) if np.any(inner) else float("nan"),
        Q_mean_re=float(np.nanmean(ff.Q[inner]).real) if np.any(inner) else float("nan"),
        Q_mean_im=float(np.nanmean(ff.Q[inner]).imag) if np.any(inner) else float("nan"),
        H=asdict(ht),
        gauss=gauss_test(ff.u, Hc, ff.Q, grid, ff.mask),
        codazzi=codazzi_test(ff.Q, grid, ff.mask),
        flatness=flatness_test(A, B, grid, mask),
    )
    return rep, ff


def associate_family(forms, thetas):
    """Max deviation of u across theta, and of Q_theta from theta^-2 Q_1.

    ``forms[k]`` belongs to theta_eval = exp(i thetas[k]); the first entry is
    the reference and need not be theta = 1.
    """
    ref, t0 = forms[0], thetas[0]
    du = dq = 0.0
    for ff, t in zip(forms[1:], thetas[1:]):
        m = ref.mask & ff.mask
        if not np.any(m):
            continue
        du = max(du, float(np.max(np.abs(ff.u[m] - ref.u[m]))))
        rot = np.exp(-2j * (t - t0))
        dq = max(dq, float(np.max(np.abs(ff.Q[m] - rot * ref.Q[m]))))
    return du, dq


def verify_frame(frame, thetas=(0.0,), tolerances=None):
    """Immerse at each angle in ``thetas`` and assemble a :class:`VerifyReport`.

    The headline numbers (det, H statistics, residuals) come from the first
    angle; the associate-family spreads compare all of them.
    """
    from .dpw import immerse

    tol = tolerances or {}
    reps, forms = [], []
    for t in thetas:
        f, F, N = immerse(frame.G, frame.F_tilde, np.exp(1j * t))
        rep, ff = analyse_surface(f, F, N, frame.grid, frame.a, frame.mask, tol)
        rep.theta = float(t)
        reps.append(rep)
        forms.append(ff)
    first = reps[0]
    d = frame.diagnostics
    paths = [d.get(k, float("nan")) for k in ("F_minus_path", "G_path", "G_minus_path", "G_plus_path")]
    out = VerifyReport(
        a=frame.a,
        det_deviation=max(r.det_deviation for r in reps),
        hermitian_deviation=max(r.hermitian_deviation for r in reps),
        H_mean=first.H["mean"],
        H_stdev=first.H["stdev"],
        H_rel_stdev=first.H["rel_stdev"],
        decision=first.H["decision"],
        candidates={"plus": first.H["plus"], "minus": first.H["minus"],
                    "distance_plus": first.H["distance_plus"], "distance_minus": first.H["distance_minus"]},
        gauss=max(r.gauss for r in reps),
        codazzi=max(r.codazzi for r in reps),
        flatness=max(r.flatness for r in reps),
        unitarity=d.get("unitarity", float("nan")),
        path_dependence=float(np.nanmax(paths)),
        tail_budget=d.get("F_minus_tail", 0.0) + d.get("G_tail", 0.0),
        per_theta=[asdict(r) for r in reps],
        diagnostics=dict(d),
    )
    if len(thetas) > 1:
        out.associate_u, out.associate_Q = associate_family(forms, list(thetas))
    if out.det_deviation > 1e-6:
        out.warnings.append(f"det f deviates from 1 by {out.det_deviation:.2e}")
    if out.path_dependence > tol.get("path_dependence", 1e-6):
        out.warnings.append(f"two-path discrepancy {out.path_dependence:.2e} above tolerance")
    if out.tail_budget > tol.get("tail", 1e-8):
        out.warnings.append(f"truncation tail budget {out.tail_budget:.2e} above tolerance")
    if d.get("pole_nodes"):
        out.warnings.append(f"{d['pole_nodes']} pole node(s) masked")
    if d.get("path_through_singular"):
        out.warnings.append(f"{d['path_through_singular']} node(s) integrated through singular points")
    return out
