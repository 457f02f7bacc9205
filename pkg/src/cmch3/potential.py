"""Normalized potentials and run configuration."""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import exprparse
from .errors import ConfigError, DomainError, Pole
from .gctheory import Grid, h_of_a

DEFAULT_TOLERANCES = {
    "hermitian": 1e-9,
    "pole_threshold": 1e-12,
    "unitarity": 1e-8,
    "path_dependence": 1e-6,
    "tail": 1e-8,
    "birkhoff_cond": 1e10,
    "h_match": 1e-2,
    "h_rel_stdev": 1e-3,
}

_NUMBER_OR_STRING = {"oneOf": [{"type": "number"}, {"type": "string"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["potential"],
    "additionalProperties": False,
    "properties": {
        "potential": {
            "type": "object",
            "required": ["Q", "h"],
            "additionalProperties": False,
            "properties": {
                "Q": {"type": "string"},
                "h": {"type": "string"},
                "a": _NUMBER_OR_STRING,
                "H_target": _NUMBER_OR_STRING,
                "H": _NUMBER_OR_STRING,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "half_widths": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                "minItems": 2, "maxItems": 2},
                "nx": {"type": "integer", "minimum": 3},
                "ny": {"type": "integer", "minimum": 3},
            },
        },
        "loop_degree": {"type": "integer", "minimum": 1},
        "toeplitz_order": {"type": "integer", "minimum": 1},
        "theta_samples": {
            "oneOf": [
                {"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "number"}, "minItems": 1},
            ]
        },
        "g_route": {"enum": ["gauge", "split"]},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["obj", "ply"]}},
                "projection": {"enum": ["poincare", "lorentz-raw"]},
            },
        },
    },
}


@dataclass(frozen=True)
class PotentialSpec:
    """Holomorphic data (Q, h) and the beta-form parameter a.

    ``H`` is the mean-curvature parameter entering sqrt(H^2 - 1) in the
    potential.  When omitted it defaults to the curvature targeted by ``a``.
    """

    Q_expr: exprparse.Expr
    h_expr: exprparse.Expr
    a: float
    H: float = None
    Q_text: str = ""
    h_text: str = ""

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if self.a == 1:
            raise DomainError("a = 1 is a pole of the mean-curvature formula")
        if self.H is None:
            object.__setattr__(self, "H", h_of_a(self.a))
        if not abs(self.H) > 1:
            raise DomainError(f"potential needs |H| > 1, got {self.H}")
        try:
            h0 = exprparse.eval_expr(self.h_expr, 0.0)
        except Pole as exc:
            raise DomainError("h(z) must be finite at the basepoint z = 0") from exc
        object.__setattr__(self, "_h0", h0)

    @classmethod
    def from_strings(cls, Q, h, a, H=None):
        return cls(exprparse.parse(Q), exprparse.parse(h), float(a), None if H is None else float(H), Q, h)

    @property
    def h0(self):
        return self._h0

    @property
    def target_H(self):
        return h_of_a(self.a)


def _entries(Q, h, h0, c):
    return -np.exp(-2 * h + h0) * Q, 0.5 * np.exp(2 * h - h0) * c


def normalized_potential(spec, H, z, pole_threshold=exprparse.POLE_THRESHOLD):
    """The off-diagonal matrix P(z); the loop potential is theta^-1 P dz."""
    if not abs(H) > 1:
        raise DomainError("normalized potential needs |H| > 1")
    Q = exprparse.eval_expr(spec.Q_expr, z, pole_threshold)
    h = exprparse.eval_expr(spec.h_expr, z, pole_threshold)
    upper, lower = _entries(Q, h, spec.h0, math.sqrt(H * H - 1))
    return np.array([[0, upper], [lower, 0]], dtype=complex)


def potential_field(spec, H, z, pole_threshold=exprparse.POLE_THRESHOLD):
    """Vectorised P over an array of points: returns (P, pole_mask)."""
    z = np.asarray(z, dtype=complex)
    Q, pq = exprparse.eval_array(spec.Q_expr, z, pole_threshold)
    h, ph = exprparse.eval_array(spec.h_expr, z, pole_threshold)
    upper, lower = _entries(Q, h, spec.h0, math.sqrt(H * H - 1))
    poles = pq | ph | ~np.isfinite(upper) | ~np.isfinite(lower)
    P = np.zeros(z.shape + (2, 2), dtype=complex)
    P[..., 0, 1] = np.where(poles, 0, upper)
    P[..., 1, 0] = np.where(poles, 0, lower)
    P[poles] = np.nan
    return P, poles


def euclidean_potential(spec, c, z):
    """Normalized potential of a Euclidean CMC surface with curvature c."""
    Q = exprparse.eval_expr(spec.Q_expr, z)
    h = exprparse.eval_expr(spec.h_expr, z)
    h0 = exprparse.eval_expr(spec.h_expr, 0.0)
    return np.array([[0.0, -Q * np.exp(h0 - 2 * h)], [c * np.exp(2 * h - h0) / 2, 0.0]], dtype=complex)


def lawson_euclidean_curvature(H):
    """Euclidean cousin curvature c with H = sqrt(c^2 + 1)."""
    if not abs(H) > 1:
        raise DomainError("Lawson cousin needs |H| > 1")
    return math.sqrt(H * H - 1)


def euclidean_potential_check(spec, H, points=None, tol=1e-12, seed=0):
    """Compare the hyperbolic potential with its Euclidean cousin's.

    Returns ``(passed, max_deviation)`` over the sample points (default: 50
    points in the unit disk that avoid poles).
    """
    if points is None:
        rng = np.random.default_rng(seed)
        r = 0.9 * np.sqrt(rng.uniform(size=50))
        points = r * np.exp(2j * np.pi * rng.uniform(size=50))
    c = lawson_euclidean_curvature(H)
    worst = 0.0
    for z in points:
        try:
            P = normalized_potential(spec, H, z)
            E = euclidean_potential(spec, c, z)
        except Pole:
            continue
        scale = 1.0 + np.max(np.abs(E))
        worst = max(worst, float(np.max(np.abs(P - E)) / scale))
    return worst <= tol, worst


# ------------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSpec
    grid: Grid
    loop_degree: int = 16
    toeplitz_order: int = None
    thetas: tuple = (1.0 + 0j,)
    g_route: str = "gauge"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "out"
    formats: tuple = ("obj",)
    projection: str = "poincare"
    H_explicit: bool = False


def _scalar(value, path):
    if isinstance(value, (int, float)):
        return float(value)
    try:
        v = exprparse.eval_expr(exprparse.parse(value), 0.0)
    except Exception as exc:  # noqa: BLE001 - reported with the field path
        raise ConfigError(f"cannot evaluate {value!r}: {exc}", path) from exc
    if abs(v.imag) > 1e-14:
        raise ConfigError(f"{value!r} is not real", path)
    return v.real


def parse_config(data):
    """Validate a config mapping and build a :class:`RunConfig`."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(exc.message, path) from exc

    pot = data["potential"]
    if ("a" in pot) == ("H_target" in pot):
        raise ConfigError("give exactly one of 'a' or 'H_target'", "potential")
    if "a" in pot:
        a = _scalar(pot["a"], "potential/a")
        if a <= 0:
            raise ConfigError("a must be positive", "potential/a")
        if abs(a - 1) < 1e-12:
            raise ConfigError("a = 1 is a pole of the mean-curvature formula", "potential/a")
    else:
        Ht = _scalar(pot["H_target"], "potential/H_target")
        if not abs(Ht) > 1:
            raise ConfigError("H_target must satisfy |H| > 1", "potential/H_target")
        a = math.sqrt((Ht + 1) / (Ht - 1))
    H = _scalar(pot["H"], "potential/H") if "H" in pot else None
    exprs = {}
    for key in ("Q", "h"):
        try:
            exprs[key] = exprparse.parse(pot[key])
        except exprparse.ParseError as exc:
            raise ConfigError(str(exc), f"potential/{key}") from exc
    try:
        spec = PotentialSpec(exprs["Q"], exprs["h"], a, H, pot["Q"], pot["h"])
    except DomainError as exc:
        raise ConfigError(str(exc), "potential") from exc

    g = data.get("grid", {})
    try:
        grid = Grid.centered(
            complex(*g.get("center", (0.0, 0.0))),
            tuple(g.get("half_widths", (0.5, 0.5))),
            (g.get("nx", 65), g.get("ny", 65)),
        )
        grid.origin_index()
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from exc

    ts = data.get("theta_samples", 1)
    if isinstance(ts, int):
        thetas = tuple(np.exp(2j * np.pi * k / ts) for k in range(ts))
    else:
        thetas = tuple(np.exp(1j * t) for t in ts)

    tol = dict(DEFAULT_TOLERANCES)
    tol.update(data.get("tolerances", {}))
    out = data.get("output", {})
    return RunConfig(
        potential=spec,
        grid=grid,
        loop_degree=data.get("loop_degree", 16),
        toeplitz_order=data.get("toeplitz_order"),
        thetas=thetas,
        g_route=data.get("g_route", "gauge"),
        tolerances=tol,
        output_dir=out.get("dir", "out"),
        formats=tuple(out.get("formats", ("obj",))),
        projection=out.get("projection", "poincare"),
        H_explicit=H is not None,
    )


def load_config(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_config(data)
