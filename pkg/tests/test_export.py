import numpy as np
import pytest

from cmch3 import export
from cmch3.linalg2c import from_hermitian, to_hermitian

from test_verify import geodesic_sphere, G


def test_basepoint_field_collapses_to_one_vertex():
    f = np.broadcast_to(np.eye(2, dtype=complex), (4, 4, 2, 2))
    m = export.build_mesh(f)
    assert m.vertices.shape == (1, 3) and not m.vertices.any()
    assert len(m.faces) == 0


def test_projection_example():
    np.testing.assert_allclose(export.project(to_hermitian(np.array([2.0, 1, 1, 1]))), [1 / 3] * 3)
    with pytest.raises(ValueError):
        export.project(np.eye(2), "klein")


def test_mesh_inside_ball_and_topology():
    f, _, _ = geodesic_sphere(G, 0.5)
    m = export.build_mesh(f)
    assert m.vertices.shape == (65 * 65, 3)
    assert len(m.faces) == 2 * 64 * 64
    assert np.all(np.linalg.norm(m.vertices, axis=1) < 1)


def test_masked_nodes_are_dropped_and_repaired():
    f, _, _ = geodesic_sphere(G, 0.5)
    mask = np.ones(G.shape, bool)
    mask[10, 10] = False
    m = export.build_mesh(f, mask)
    assert len(m.vertices) == 65 * 65 - 1
    # each of the 4 quads around the hole keeps one triangle
    assert len(m.faces) == 2 * 64 * 64 - 4
    assert m.faces.max() < len(m.vertices)
    with pytest.raises(export.EmptyMesh):
        export.build_mesh(f, np.zeros(G.shape, bool))


def test_obj_round_trip(tmp_path):
    f, _, _ = geodesic_sphere(G, 0.5)
    m = export.build_mesh(f)
    export.write_obj(tmp_path / "s.obj", m)
    v, faces = export.read_obj(tmp_path / "s.obj")
    np.testing.assert_array_equal(v, m.vertices)  # 17 significant digits are lossless
    np.testing.assert_array_equal(faces, m.faces)


def test_ply_round_trip(tmp_path):
    f, _, _ = geodesic_sphere(G, 0.5)
    mask = np.ones(G.shape, bool)
    mask[0, :5] = False
    export.write_ply(tmp_path / "s.ply", f, mask)
    head = (tmp_path / "s.ply").read_bytes()[:60]
    assert b"binary_little_endian" in head
    coords, vmask, faces = export.read_ply(tmp_path / "s.ply")
    assert coords.shape == (65 * 65, 3)
    np.testing.assert_array_equal(vmask, mask.ravel())
    assert np.all(vmask[faces])
    np.testing.assert_allclose(coords[vmask], export.project(f).reshape(-1, 3)[vmask])


def test_lorentz_raw_round_trip(tmp_path):
    f, _, _ = geodesic_sphere(G, 0.5)
    export.write_ply(tmp_path / "raw.ply", f, projection="lorentz-raw")
    coords, _, _ = export.read_ply(tmp_path / "raw.ply")
    np.testing.assert_allclose(to_hermitian(coords).reshape(f.shape), f, atol=1e-15)
    np.testing.assert_allclose(from_hermitian(f).reshape(-1, 4), coords)
