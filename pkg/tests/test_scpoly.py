import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoflect.harmonic import poisson_disk
from isoflect.reflect import cluster_set
from isoflect.scpoly import (
    MAX_N, PolygonChart, polygon_height, sc_map, schwarz_d_generators, schwarz_d_tiling,
    schwarz_patch, schwarz_patch_mesh,
)
from isoflect.verify import harmonicity, sc_symmetry

# half-diagonals int_0^1 (1 - x^{2n})^{-1/n} dx = B(1/(2n), 1 - 1/n) / (2n), 30-digit mpmath
HALF_DIAGONAL = {2: 1.3110287771460599, 3: 1.1129126745223054, 4: 1.0590783619739316}


def test_origin_maps_to_origin():
    for n in (2, 3, 7):
        assert sc_map(n, 0) == 0


@pytest.mark.parametrize("n", sorted(HALF_DIAGONAL))
def test_half_diagonal(n):
    assert abs(PolygonChart(n).radius - HALF_DIAGONAL[n]) < 1e-12
    assert abs(sc_map(n, 1.0) - HALF_DIAGONAL[n]) < 1e-6


def test_argument_checks():
    with pytest.raises(ValueError):
        sc_map(1, 0.5)
    with pytest.raises(ValueError):
        sc_map(MAX_N + 1, 0.5)
    with pytest.raises(ValueError):
        sc_map(2, 1.5)
    with pytest.raises(ValueError):
        polygon_height(2, 1.0)


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_regular_polygon(n):
    chart = PolygonChart(n)
    v = chart.vertices
    assert np.ptp(chart.edge_lengths()) <= 1e-8
    assert np.ptp(chart.vertex_angles()) <= 1e-8
    assert np.ptp(np.abs(v)) <= 1e-12
    np.testing.assert_allclose(chart.midpoints, 0.5 * (v + np.roll(v, 1)), atol=1e-7)


def test_polygon_height_values():
    assert polygon_height(2, 0) == pytest.approx(0.5, abs=1e-15)
    # radial limits into the interior of I_1 (around e^{i pi/2}) and I_2
    assert polygon_height(2, (1 - 1e-10) * 1j) == pytest.approx(1, abs=1e-8)
    assert polygon_height(2, (1 - 1e-10) * -1) == pytest.approx(0, abs=1e-8)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_polygon_height_is_poisson_of_boundary_data(n):
    rng = np.random.default_rng(n)
    w = np.sqrt(rng.uniform(0, 0.98, 50)) * np.exp(1j * rng.uniform(0, 2 * math.pi, 50))
    bd = PolygonChart(n).boundary_data()
    np.testing.assert_allclose(polygon_height(n, w), poisson_disk(bd, w), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_symmetry_suite(n):
    res = sc_symmetry(n)
    assert res.passed, res.details
    assert res.residual <= 1e-8


def test_patch_harmonic():
    rng = np.random.default_rng(1)
    w = np.sqrt(rng.uniform(0, 0.9, 100)) * np.exp(1j * rng.uniform(0, 2 * math.pi, 100))
    assert harmonicity(schwarz_patch(2), w).passed


def test_cluster_set_at_edge_midpoint():
    chart = PolygonChart(2)
    seg = cluster_set(schwarz_patch(2), chart.jump_chart(1))
    assert (seg.tmin, seg.tmax) == (0.0, 1.0)
    assert abs(seg.z0 - chart.midpoints[0]) < 1e-6
    assert seg.residual < 1e-5


def test_patch_mesh_and_generators():
    mesh, faces = schwarz_patch_mesh(2, 4)
    assert mesh.validate() == []
    gens = schwarz_d_generators(2)
    assert len(gens) == 8
    for k, g in enumerate(gens):
        assert g.compose(g).is_identity()
        # every generator maps its own boundary face onto itself
        pts = mesh.vertices[faces[k]]
        img = g.apply(pts)
        d = np.linalg.norm(img[:, None, :] - pts[None, :, :], axis=-1).min(axis=1)
        assert d.max() <= 1e-9


def test_tiling_depth_counts():
    assert len(schwarz_d_tiling(0, resolution=4).meshes) == 1
    res = schwarz_d_tiling(1, resolution=4)
    assert len(res.meshes) == 9
    assert res.seam_residual <= 1e-8


@given(st.integers(2, 6), st.floats(0, 0.999), st.floats(0, 2 * math.pi))
def test_rotation_and_conjugation_symmetry(n, rho, phi):
    w = rho * cmath.exp(1j * phi)
    rot = cmath.exp(1j * math.pi / n)
    f = sc_map(n, w)
    assert abs(sc_map(n, rot * w) - rot * f) <= 1e-8
    assert abs(sc_map(n, w.conjugate()) - f.conjugate()) <= 2e-14


@given(st.integers(2, 6), st.floats(0, 0.9999), st.floats(0, 2 * math.pi))
def test_height_strict_max_principle(n, rho, phi):
    t = polygon_height(n, rho * cmath.exp(1j * phi))
    assert 0 < t < 1
