import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoflect.harmonic import BlowUpChart
from isoflect.mesh import (
    BOUNDARY, SEAM, Mesh, MeshError, build_mesh, export, laplacian_residual, read_obj, read_ply,
    sample_grid, weld, worker_count, write_obj, write_ply,
)
from isoflect.reflect import ArcChart, extend_isotropic
from isoflect.scpoly import schwarz_d_tiling
from isoflect.weierstrass import from_harmonic_pair, helicoid


def flat():
    return from_harmonic_pair("w", lambda p: np.zeros(np.shape(p)), "half-plane")


def test_halfplane_grid_count():
    g = sample_grid("half-plane", 4, (0.5, 2, math.pi / 8, 7 * math.pi / 8))
    assert g.params.size == 16
    assert np.all(g.params.imag > 0)


def test_blowup_grid_contains_zero():
    for res in (4, 5, 9):
        g = sample_grid("blowup", res, (-1, 1, 0.1, math.pi - 0.1))
        r = g.params.real[:, 0]
        assert 0.0 in r
        assert np.all(np.diff(r) > 0)


def test_disk_grid_margin():
    g = sample_grid("disk", 6, (0, 1))
    assert np.abs(g.params).max() <= 1 - 1e-4 + 1e-12
    assert g.periodic


def test_grid_validation():
    with pytest.raises(MeshError):
        sample_grid("half-plane", 1, (0.5, 2, 0.1, 3))
    with pytest.raises(MeshError):
        sample_grid("half-plane", 4, (0.5, 2, -0.1, 3))
    with pytest.raises(MeshError):
        sample_grid("torus", 4, (0, 1, 0, 1))


def test_flat_plane_two_triangles():
    g = sample_grid("half-plane", 2, (0.5, 1, 0.5, 1.0))
    m = build_mesh(flat(), g)
    assert m.n_triangles == 2 and m.n_vertices == 4
    assert m.validate() == []
    assert np.all(m.flags & BOUNDARY)


def test_blowup_mesh_marks_seam():
    jump = BlowUpChart(0, 1.0, 0.0)
    ext = extend_isotropic(helicoid(), jump, ArcChart.line(0, 1))
    m = build_mesh(ext, sample_grid("blowup", 5, (-1, 1, 0.2, 2.9), blowup=jump))
    seam = m.flags & SEAM > 0
    assert seam.sum() == 5
    np.testing.assert_allclose(m.vertices[seam, :2], 0, atol=1e-15)
    assert m.validate() == []


def test_build_mesh_reports_failing_node():
    g = sample_grid("half-plane", 3, (0.5, 1, 0.5, 1.0))
    bad = from_harmonic_pair("w", lambda p: np.log(np.abs(p) - 0.75), "half-plane")
    with np.errstate(divide="ignore", invalid="ignore"), pytest.raises(MeshError):
        build_mesh(bad, g)


def _one_triangle():
    return Mesh(np.array([[0, 0, 0], [1, 0, 0.1], [0, 1, 1 / 3]], float), np.array([[0, 1, 2]]),
                np.array([1, 2, 4], dtype=np.uint8))


def test_obj_single_triangle(tmp_path):
    path = tmp_path / "t.obj"
    write_obj(_one_triangle(), path)
    lines = path.read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 3
    assert sum(line.startswith("f ") for line in lines) == 1
    assert "f 1 2 3" in lines


def test_obj_roundtrip_lossless(tmp_path):
    rng = np.random.default_rng(0)
    m = Mesh(rng.normal(size=(10, 3)) * 1e3, rng.integers(0, 10, size=(6, 3)))
    path = tmp_path / "r.obj"
    write_obj(m, path)
    back = read_obj(path)
    np.testing.assert_array_equal(back.vertices, m.vertices)
    np.testing.assert_array_equal(back.triangles, m.triangles)


def test_ply_header_and_roundtrip(tmp_path):
    m = _one_triangle()
    path = tmp_path / "t.ply"
    export(m, "ply", path)
    data = path.read_bytes()
    header = data[:data.index(b"end_header")].decode()
    assert "element vertex 3" in header and "element face 1" in header
    assert "format binary_little_endian 1.0" in header
    back = read_ply(path)
    assert back.vertices.tobytes() == m.vertices.tobytes()
    np.testing.assert_array_equal(back.triangles, m.triangles)
    np.testing.assert_array_equal(back.flags, m.flags)


def test_export_rejects_unknown_format(tmp_path):
    with pytest.raises((MeshError, ValueError)):
        export(_one_triangle(), "stl", tmp_path / "x.stl")


def test_weld_merges_shared_edge():
    a = Mesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], float), np.array([[0, 1, 2]]))
    b = Mesh(np.array([[1, 0, 0], [1, 1, 0], [0, 1, 1e-12]], float), np.array([[0, 1, 2]]))
    m = weld([a, b])
    assert m.n_vertices == 4 and m.n_triangles == 2
    assert m.edge_orientation_conflicts() == 0
    assert m.boundary_edges() == 4


def test_welded_tiling_is_consistently_oriented():
    res = schwarz_d_tiling(1, resolution=3)
    m = weld(res.meshes)
    assert m.edge_orientation_conflicts() == 0
    assert m.validate() == []


def test_laplacian_residual_helicoid():
    p = np.array([1j, 0.5 + 0.5j, -2 + 0.3j])
    assert np.all(laplacian_residual(helicoid(), p) < 1e-7)
    bent = from_harmonic_pair("w", lambda q: np.abs(q) ** 2, "half-plane")
    assert np.all(laplacian_residual(bent, p) > 1e-3)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("ISOFLECT_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("ISOFLECT_THREADS", "0")
    assert worker_count() == 1
    monkeypatch.setenv("ISOFLECT_THREADS", "junk")
    assert worker_count() >= 1


def test_threaded_evaluation_matches_serial(monkeypatch):
    g = sample_grid("half-plane", 24, (0.2, 3, 0.1, 3.0))
    monkeypatch.setenv("ISOFLECT_THREADS", "1")
    a = build_mesh(helicoid(), g)
    monkeypatch.setenv("ISOFLECT_THREADS", "4")
    b = build_mesh(helicoid(), g)
    assert a.vertices.tobytes() == b.vertices.tobytes()


@given(st.integers(2, 9), st.floats(0.1, 1), st.floats(1.5, 4))
def test_grid_meshes_valid(res, r0, r1):
    m = build_mesh(helicoid(), sample_grid("half-plane", res, (r0, r1, 0.2, 2.9)))
    assert m.n_vertices == res * res
    assert m.n_triangles == 2 * (res - 1) ** 2
    assert m.validate() == []
    assert m.edge_orientation_conflicts() == 0
