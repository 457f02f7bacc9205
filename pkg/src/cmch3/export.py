"""Mesh export of an immersion field: OBJ text and binary PLY."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CMCError
from .linalg2c import from_hermitian, poincare_ball

PROJECTIONS = ("poincare", "lorentz-raw")
FORMATS = ("obj", "ply")


class EmptyMesh(CMCError):
    """Every node of the field is masked."""


@dataclass
class MeshOutput:
    vertices: np.ndarray  # (V, 3) ball coordinates or (V, 4) Lorentz vectors
    faces: np.ndarray  # (F, 3) vertex indices
    mask: np.ndarray  # (V,) True for valid vertices
    lorentz: np.ndarray = None  # (V, 4) raw vectors when available


def project(f, projection="poincare"):
    """Hermitian field (..., 2, 2) -> coordinates (..., 3) or (..., 4)."""
    if projection not in PROJECTIONS:
        raise ValueError(f"unknown projection {projection!r}")
    v = from_hermitian(f, tol=1e-6)
    return poincare_ball(v) if projection == "poincare" else v


def grid_triangles(ny, nx):
    """Two triangles per grid quad, consistently oriented, node index iy*nx+ix."""
    iy, ix = np.meshgrid(np.arange(ny - 1), np.arange(nx - 1), indexing="ij")
    a = (iy * nx + ix).ravel()
    b, c, d = a + 1, a + nx + 1, a + nx
    quads = np.stack([a, b, c, d], axis=1)
    return quads


def _repair(quads, valid):
    """Triangulate quads; a quad with one masked corner keeps the other three."""
    tris = []
    ok = valid[quads]
    nbad = np.count_nonzero(~ok, axis=1)
    full = quads[nbad == 0]
    tris.append(full[:, [0, 1, 2]])
    tris.append(full[:, [0, 2, 3]])
    one = quads[nbad == 1]
    if one.size:
        keep = ok[nbad == 1]
        # cyclic order of the surviving corners preserves orientation
        rest = np.array([q[k] for q, k in zip(one, keep)])
        tris.append(rest)
    return np.concatenate(tris, axis=0) if tris else np.zeros((0, 3), dtype=int)


def build_mesh(f, mask=None, projection="poincare", merge=True):
    """Mesh of a gridded f; masked nodes are dropped and coincident vertices merged."""
    f = np.asarray(f)
    ny, nx = f.shape[:2]
    valid = np.ones((ny, nx), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    valid &= np.all(np.isfinite(f), axis=(-2, -1))
    if not np.any(valid):
        raise EmptyMesh("all nodes are masked")
    flat_valid = valid.ravel()
    safe = np.where(valid[..., None, None], f, np.eye(2))
    lor = from_hermitian(safe, tol=1e-6).reshape(-1, 4)
    coords = poincare_ball(lor) if projection == "poincare" else lor
    if projection not in PROJECTIONS:
        raise ValueError(f"unknown projection {projection!r}")
    tris = _repair(grid_triangles(ny, nx), flat_valid)
    keep = np.flatnonzero(flat_valid)
    remap = np.full(ny * nx, -1)
    if merge:
        _, first, inverse = np.unique(coords[keep], axis=0, return_index=True, return_inverse=True)
        order = np.argsort(first)  # first-occurrence order keeps grid ordering
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        remap[keep] = rank[inverse.ravel()]
        verts = coords[keep][np.sort(first)]
        lverts = lor[keep][np.sort(first)]
    else:
        remap[keep] = np.arange(keep.size)
        verts, lverts = coords[keep], lor[keep]
    faces = remap[tris]
    nondegenerate = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    faces = faces[nondegenerate]
    return MeshOutput(verts, faces, np.ones(len(verts), dtype=bool), lverts)


def write_obj(path, mesh):
    """Plain OBJ; 17 significant digits, 1-based faces."""
    lines = ["# hyperbolic CMC surface"]
    for v in mesh.vertices:
        lines.append("v " + " ".join(f"{x:.17g}" for x in v))
    for t in mesh.faces:
        lines.append("f " + " ".join(str(int(i) + 1) for i in t))
    Path(path).write_text("\n".join(lines) + "\n")


def write_ply(path, f, mask=None, projection="poincare"):
    """Binary little-endian PLY with every grid node and a uchar mask property.

    Masked nodes are written with zero coordinates and mask 0; faces only
    use valid nodes.
    """
    f = np.asarray(f)
    ny, nx = f.shape[:2]
    valid = np.ones((ny, nx), dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    valid &= np.all(np.isfinite(f), axis=(-2, -1))
    if not np.any(valid):
        raise EmptyMesh("all nodes are masked")
    safe = np.where(valid[..., None, None], f, np.eye(2))
    coords = project(safe, projection).reshape(ny * nx, -1)
    coords[~valid.ravel()] = 0.0
    tris = _repair(grid_triangles(ny, nx), valid.ravel())
    names = ("x", "y", "z") if coords.shape[1] == 3 else ("x0", "x1", "x2", "x3")
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {ny * nx}"]
    header += [f"property double {n}" for n in names]
    header += ["property uchar mask", f"element face {len(tris)}",
               "property list uchar int vertex_indices", "end_header"]
    vdtype = np.dtype([(n, "<f8") for n in names] + [("mask", "u1")])
    vert = np.empty(ny * nx, dtype=vdtype)
    for k, n in enumerate(names):
        vert[n] = coords[:, k]
    vert["mask"] = valid.ravel().astype(np.uint8)
    fdtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
    face = np.empty(len(tris), dtype=fdtype)
    face["n"] = 3
    face["idx"] = tris
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(vert.tobytes())
        fh.write(face.tobytes())


def read_ply(path):
    """Minimal reader for files written by :func:`write_ply`."""
    data = Path(path).read_bytes()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    nv = nf = 0
    names = []
    for line in header:
        parts = line.split()
        if parts[:2] == ["element", "vertex"]:
            nv = int(parts[2])
        elif parts[:2] == ["element", "face"]:
            nf = int(parts[2])
        elif parts[:2] == ["property", "double"]:
            names.append(parts[2])
    vdtype = np.dtype([(n, "<f8") for n in names] + [("mask", "u1")])
    vert = np.frombuffer(data, dtype=vdtype, count=nv, offset=end)
    fdtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
    face = np.frombuffer(data, dtype=fdtype, count=nf, offset=end + nv * vdtype.itemsize)
    coords = np.stack([vert[n] for n in names], axis=1)
    return coords, vert["mask"].astype(bool), face["idx"].copy()


def read_obj(path):
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("v "):
            verts.append([float(x) for x in line.split()[1:]])
        elif line.startswith("f "):
            faces.append([int(x) - 1 for x in line.split()[1:]])
    return np.array(verts), np.array(faces, dtype=int).reshape(-1, 3)


def export_mesh(path, f, mask=None, fmt="obj", projection="poincare"):
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "obj":
        write_obj(path, build_mesh(f, mask, projection))
    else:
        write_ply(path, f, mask, projection)
    return Path(path)
