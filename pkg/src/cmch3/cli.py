"""Command line front end: ``cmch3 build|deform|verify|export``."""
import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dpw, export, gctheory, verify
from .errors import CMCError, ConfigError, InfiniteMeanCurvature
from .gctheory import Grid, SurfaceTriple
from .potential import DEFAULT_TOLERANCES, load_config

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE = 0, 2, 3

log = logging.getLogger("cmch3")


def _theta_tag(t):
    return f"{t:.4f}"


def _setup_log(outdir):
    outdir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(outdir / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    root = logging.getLogger()
    root.handlers = [h for h in root.handlers if not isinstance(h, logging.FileHandler)]
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    return handler


def save_fields(path, frame):
    g = frame.grid
    np.savez_compressed(
        path,
        G=frame.G, F_tilde=frame.F_tilde, mask=frame.mask, a=frame.a,
        grid=np.array([g.x0, g.y0, g.hx, g.hy, g.nx, g.ny], dtype=float),
        route=frame.route, diagnostics=json.dumps(verify._finite_json(frame.diagnostics)),
    )


class _SavedFrame:
    """The subset of FrameField needed by verification and export."""

    def __init__(self, path):
        with np.load(path) as d:
            self.G, self.F_tilde, self.mask = d["G"], d["F_tilde"], d["mask"]
            self.a = float(d["a"])
            x0, y0, hx, hy, nx, ny = d["grid"]
            self.grid = Grid(x0, y0, hx, hy, int(nx), int(ny))
            self.route = str(d["route"])
            self.diagnostics = json.loads(str(d["diagnostics"]))


def _write_meshes(frame, thetas, outdir, formats, projection):
    written = []
    for t in thetas:
        f, _, _ = dpw.immerse(frame.G, frame.F_tilde, np.exp(1j * t))
        for fmt in formats:
            path = outdir / f"surface_{_theta_tag(t)}.{fmt}"
            export.export_mesh(path, f, frame.mask, fmt, projection)
            written.append(str(path))
    return written


def run_build(config_path, thetas=None, outdir=None, route=None):
    """Run the construction, write meshes, report.json and run.log; returns an exit status."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outdir = Path(outdir or cfg.output_dir)
    handler = _setup_log(outdir)
    try:
        angles = list(thetas) if thetas else [float(np.angle(t)) for t in cfg.thetas]
        route = route or cfg.g_route
        spec = cfg.potential
        log.info("cmch3 %s build: Q=%s h=%s a=%.12g H_potential=%.12g route=%s N=%d grid=%dx%d",
                 __version__, spec.Q_text, spec.h_text, spec.a, spec.H, route, cfg.loop_degree,
                 cfg.grid.nx, cfg.grid.ny)
        t0 = time.perf_counter()
        frame = dpw.build_frame(spec, cfg.grid, cfg.loop_degree, cfg.toeplitz_order, route, cfg.tolerances)
        log.info("pipeline finished in %.2f s", time.perf_counter() - t0)
        for k, v in frame.diagnostics.items():
            log.info("diagnostic %s = %s", k, v)
        if not np.any(frame.mask):
            log.error("every node is masked")
            report = {"status": "degenerate", "diagnostics": verify._finite_json(frame.diagnostics),
                      "poles": [[z.real, z.imag] for z in frame.poles]}
            (outdir / "report.json").write_text(json.dumps(report, indent=2))
            return EXIT_DEGENERATE
        rep = verify.verify_frame(frame, angles, cfg.tolerances)
        for w in rep.warnings:
            log.warning(w)
        d = rep.to_dict()
        d.update({
            "status": "ok",
            "route": route,
            "potential": {"Q": spec.Q_text, "h": spec.h_text, "a": spec.a, "H_potential": spec.H,
                          "H_explicit": cfg.H_explicit},
            "target_H": spec.target_H,
            "poles": [[z.real, z.imag] for z in frame.poles],
            "masked_nodes": int(np.count_nonzero(~frame.mask)),
            "runtime_s": time.perf_counter() - t0,
        })
        d["outputs"] = _write_meshes(frame, angles, outdir, cfg.formats, cfg.projection)
        save_fields(outdir / "fields.npz", frame)
        (outdir / "report.json").write_text(json.dumps(d, indent=2))
        log.info("decision %s (H mean %.10g)", rep.decision, rep.H_mean)
        return EXIT_OK
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()


def run_verify(fields_path, thetas=None, out=None):
    frame = _SavedFrame(fields_path)
    rep = verify.verify_frame(frame, thetas or [0.0], DEFAULT_TOLERANCES)
    text = rep.to_json()
    if out:
        Path(out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def run_export(fields_path, thetas=None, outdir=".", fmt="obj", projection="poincare"):
    frame = _SavedFrame(fields_path)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for p in _write_meshes(frame, thetas or [0.0], outdir, [fmt], projection):
        print(p)
    return EXIT_OK


def load_triple(path):
    with np.load(path) as d:
        x0, y0, hx, hy, nx, ny = d["grid"]
        grid = Grid(x0, y0, hx, hy, int(nx), int(ny))
        return SurfaceTriple(d["u"], float(d["H"]), d["Q"]), grid


def save_triple(path, t, grid):
    np.savez(path, u=t.u, H=t.H, Q=t.Q,
             grid=np.array([grid.x0, grid.y0, grid.hx, grid.hy, grid.nx, grid.ny], dtype=float))


def run_deform(in_path, s, theta, out_path):
    """Apply the s- and theta-deformations; prints the residual comparison."""
    t, grid = load_triple(in_path)
    if s == 1.0:
        d = t
    else:
        d, _ = gctheory.s_deform(t, s)
    if theta != 0.0:
        d = gctheory.theta_deform(d, np.exp(1j * theta))
    save_triple(out_path, d, grid)
    g0, c0 = gctheory.gc_residual(t, grid)
    g1, c1 = gctheory.gc_residual(d, grid)
    summary = {
        "H_in": t.H, "H_out": d.H,
        "gauss_in": float(np.max(np.abs(g0))), "gauss_out": float(np.max(np.abs(g1))),
        "codazzi_in": float(np.max(np.abs(c0))), "codazzi_out": float(np.max(np.abs(c1))),
        "gauss_difference": float(np.max(np.abs(g1 - g0))),
        "codazzi_difference": float(np.max(np.abs(c1 - c0))),
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="cmch3", description="CMC surfaces in hyperbolic space from normalized potentials")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run the construction from a JSON config")
    b.add_argument("config", nargs="?")
    b.add_argument("--config", dest="config_opt")
    b.add_argument("--theta", type=float, action="append", help="angle of theta_eval in radians (repeatable)")
    b.add_argument("--out", help="output directory (overrides the config)")
    b.add_argument("--route", choices=dpw.ROUTES)

    d = sub.add_parser("deform", help="s/theta-deform a gridded (u, H, Q) triple")
    d.add_argument("input")
    d.add_argument("--s", type=float, default=1.0)
    d.add_argument("--theta", type=float, default=0.0)
    d.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="re-run verification on saved fields")
    v.add_argument("fields")
    v.add_argument("--theta", type=float, action="append")
    v.add_argument("--out")

    e = sub.add_parser("export", help="write meshes from saved fields")
    e.add_argument("fields")
    e.add_argument("--theta", type=float, action="append")
    e.add_argument("--out", default=".")
    e.add_argument("--format", choices=export.FORMATS, default="obj")
    e.add_argument("--projection", choices=export.PROJECTIONS, default="poincare")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "build":
            path = args.config_opt or args.config
            if not path:
                print("config error: no config given", file=sys.stderr)
                return EXIT_CONFIG
            return run_build(path, args.theta, args.out, args.route)
        if args.command == "deform":
            return run_deform(args.input, args.s, args.theta, args.out)
        if args.command == "verify":
            return run_verify(args.fields, args.theta, args.out)
        return run_export(args.fields, args.theta, args.out, args.format, args.projection)
    except InfiniteMeanCurvature as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except export.EmptyMesh as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, KeyError, CMCError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
