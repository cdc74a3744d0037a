import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoflect.harmonic import BlowUpChart
from isoflect.mesh import Mesh
from isoflect.reflect import (
    ArcChart, MotionI3, ReflectionError, ValidationError, cluster_set, extend_isotropic,
    isotropic_shear, orbit_tiling, period_basis, reflect_arc, reflect_horizontal,
    reflect_parallel_lines,
)
from isoflect.verify import harmonicity, reflection_involution, seam_gap
from isoflect.weierstrass import from_harmonic_pair, helicoid

REAL_AXIS = ArcChart.line(0, 1)
HELICOID_JUMP = BlowUpChart(0, 1.0, 0.0)


def flat(height=0.0):
    return from_harmonic_pair("w", lambda p: np.full(np.shape(p), height), "half-plane")


def test_line_and_circle_reflections():
    assert reflect_arc(REAL_AXIS, 2 + 3j) == 2 - 3j
    assert abs(reflect_arc(ArcChart.circle(0, 1), 2) - 0.5) < 1e-15
    diag = ArcChart.line(1j, 1 + 1j)
    assert abs(reflect_arc(diag, 0) - (-1 + 1j)) < 1e-15


def test_closed_form_inverses():
    for arc in (ArcChart.line(1 + 1j, 2 - 1j), ArcChart.circle(0.5j, 2.0)):
        s = np.linspace(-1, 1, 9)
        np.testing.assert_allclose(arc.inverse(arc.param(s)), s, atol=1e-14)


def test_analytic_arc_reflection_and_json():
    arc = ArcChart.analytic("w + i*w^2", (-0.5, 0.5))
    assert arc.is_regular()
    z = 0.1 + 0.05j
    assert abs(arc.reflect(arc.reflect(z)) - z) < 1e-10
    assert ArcChart.from_json(arc.to_json()) == arc
    with pytest.raises(ValueError):
        ArcChart.analytic("conj(w)")


def test_analytic_arc_outside_neighbourhood():
    arc = ArcChart("analytic", gamma="w + i*w^2", interval=(-0.5, 0.5), newton_steps=2)
    with pytest.raises(ReflectionError):
        arc.reflect(50 + 80j)


def test_circle_centre_has_no_reflection():
    with pytest.raises(ReflectionError):
        ArcChart.circle(1j, 1).reflect(1j)


def test_involution_suite_default_arcs():
    res = reflection_involution()
    assert res.passed and res.residual <= 1e-10


def test_flat_plane_reflects_to_itself():
    ext = reflect_horizontal(flat(), REAL_AXIS, 0.0)
    w = np.array([1 - 1j, -2 - 0.5j, 3j])
    np.testing.assert_allclose(ext(w), flat()(np.conj(w)) * [1, -1, 1], atol=1e-15)
    np.testing.assert_allclose(ext(w)[:, :2], np.stack([w.real, w.imag], axis=-1), atol=1e-15)


def test_horizontal_reflection_of_helicoid_half_boundary():
    X = helicoid()
    with pytest.raises(ValidationError):
        reflect_horizontal(X, REAL_AXIS, 0.0)
    ext = reflect_horizontal(X, REAL_AXIS, 0.0, seam=(0, math.inf))
    w = 2 * cmath.exp(0.3j)
    got = ext(np.conj(w))
    np.testing.assert_allclose(got, [w.real, -w.imag, -0.3 / math.pi], atol=1e-14)
    seam = np.linspace(0.2, 3, 12) + 0j
    assert seam_gap(ext, seam, 1j) <= 1e-9


def test_isotropic_shear():
    np.testing.assert_allclose(isotropic_shear(1, 0, 0, [1, 2, 3]), [1, 2, 2])
    p = np.array([[0.3, -1.0, 2.0], [4.0, 5.0, -6.0]])
    np.testing.assert_array_equal(isotropic_shear(0, 0, 0, p), p)
    back = isotropic_shear(-1.5, -2.0, -0.25, isotropic_shear(1.5, 2.0, 0.25, p))
    np.testing.assert_array_equal(back, p)


def test_helicoid_isotropic_extension():
    ext = extend_isotropic(helicoid(), HELICOID_JUMP, REAL_AXIS)
    s = math.sqrt(2) / 2
    np.testing.assert_allclose(ext.at(-1.0, math.pi / 4), [-s, -s, 0.25], atol=1e-15)
    for th in np.arange(1, 8) * math.pi / 8:
        np.testing.assert_allclose(ext.at(0.0, th), [0, 0, th / math.pi], atol=1e-12)


def test_isotropic_extension_restricts_bitwise():
    X = helicoid()
    ext = extend_isotropic(X, HELICOID_JUMP, REAL_AXIS)
    r = np.array([0.1, 0.5, 2.0])
    th = np.array([0.2, 1.5, 3.0])
    np.testing.assert_array_equal(ext.at(r, th), X(HELICOID_JUMP.point(r, th)))


def test_isotropic_extension_harmonic_across_seam():
    ext = extend_isotropic(helicoid(), HELICOID_JUMP, REAL_AXIS)
    rng = np.random.default_rng(0)
    r = rng.uniform(-1, 1, 200)
    th = rng.uniform(0.2, math.pi - 0.2, 200)
    assert harmonicity(ext, r + 1j * th).passed


def test_isotropic_extension_continuous_across_seam():
    ext = extend_isotropic(helicoid(), HELICOID_JUMP, REAL_AXIS)
    seam = 1j * np.linspace(0.2, math.pi - 0.2, 10)
    assert seam_gap(ext, seam, 1.0) <= 1e-9


def test_isotropic_validation():
    with pytest.raises(ValidationError):
        extend_isotropic(helicoid(), BlowUpChart(0, 0.0, 1.0), REAL_AXIS)
    with pytest.raises(ValidationError):
        extend_isotropic(helicoid(), HELICOID_JUMP, ArcChart.line(0, 1j))


def test_cluster_set_helicoid():
    seg = cluster_set(helicoid(), HELICOID_JUMP)
    np.testing.assert_allclose(seg.endpoints(), [[0, 0, 0], [0, 0, 1]], atol=1e-12)
    assert seg.residual < 1e-6


def test_cluster_set_degenerate():
    seg = cluster_set(flat(0.5), BlowUpChart(0, 0.5, 0.5))
    assert seg.degenerate
    assert seg.residual <= 1e-6


def test_parallel_lines_rotation():
    ext = reflect_parallel_lines(helicoid(), HELICOID_JUMP, 1)
    m = ext.motion
    assert m.compose(m).is_identity()
    p = np.array([0.3, 0.7, 0.2])
    np.testing.assert_allclose(m.apply(p), [0.3, -0.7, 0.8], atol=1e-15)


def test_two_parallel_rotations_make_translation():
    d, h1, h2 = 0.75, 0.2, 1.1
    r1 = MotionI3.rotation_about_line(0, 1, h1)
    r2 = MotionI3.rotation_about_line(1j * d, 1, h2)
    v = r2.compose(r1).translation_vector()
    np.testing.assert_allclose(v, [0, 2 * d, 2 * (h2 - h1)], atol=1e-15)


def _triangle():
    return Mesh(np.array([[0, 0, 0], [0.5, 0, 0], [0, 0.5, 0]], float), np.array([[0, 1, 2]]))


def test_translation_orbit():
    res = orbit_tiling(_triangle(), [MotionI3.translation((1, 0, 0))], 3)
    assert len(res.meshes) == 7
    assert len(res.periods) == 1
    np.testing.assert_allclose(res.periods[0], [1, 0, 0])
    xs = sorted(m.vertices[0, 0] for m in res.meshes)
    assert xs == [-3, -2, -1, 0, 1, 2, 3]


def test_orbit_depth_zero():
    res = orbit_tiling(_triangle(), [MotionI3.translation((1, 0, 0))], 0)
    assert len(res.meshes) == 1
    with pytest.raises(ValueError):
        orbit_tiling(_triangle(), [], -1)


def test_period_basis():
    vecs = [(2, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), (0, 0, 3), (0, 0, 0)]
    basis = period_basis(vecs)
    assert len(basis) == 3
    assert abs(np.linalg.det(np.array(basis))) == pytest.approx(3)


# -- motions ----------------------------------------------------------------------------

coord = st.floats(-5, 5)
unit = st.floats(0, 2 * math.pi).map(lambda a: cmath.exp(1j * a))


@st.composite
def motions(draw):
    kind = draw(st.sampled_from(["translation", "reflection", "rotation", "vertical", "shear"]))
    if kind == "translation":
        return MotionI3.translation((draw(coord), draw(coord), draw(coord)))
    if kind == "reflection":
        return MotionI3.planar_reflection(complex(draw(coord), draw(coord)), draw(unit),
                                          eps=draw(st.sampled_from([1, -1])), delta=draw(coord))
    if kind == "rotation":
        return MotionI3.rotation_about_line(complex(draw(coord), draw(coord)), draw(unit), draw(coord))
    if kind == "vertical":
        return MotionI3.vertical_reflection(draw(coord))
    return MotionI3.shear(draw(coord), draw(coord), draw(coord))


point3 = st.tuples(coord, coord, coord).map(np.array)


@given(motions(), motions(), point3)
def test_composition_matches_sequential_application(m1, m2, p):
    np.testing.assert_allclose(m2.compose(m1).apply(p), m2.apply(m1.apply(p)), atol=1e-11)


@given(motions(), point3)
def test_inverse(m, p):
    np.testing.assert_allclose(m.inverse().apply(m.apply(p)), p, atol=1e-11)
    assert m.compose(m.inverse()).is_identity(1e-9)


@given(motions(), point3, point3)
def test_planar_isometries_preserve_metric(m, p, q):
    if not m.is_planar_isometry():
        return
    a, b = m.apply(p), m.apply(q)
    assert abs(np.hypot(*(a - b)[:2]) - np.hypot(*(p - q)[:2])) <= 1e-12 * max(1, np.abs(p - q).max())


@given(motions())
def test_motion_json_roundtrip(m):
    assert MotionI3.from_json(m.to_json()).fingerprint() == m.fingerprint()


@given(st.sampled_from(["line", "circle"]), coord, coord, st.floats(0.5, 3), point3)
def test_arc_motions_are_involutions(kind, x, y, rad, p):
    arc = ArcChart.line(complex(x, y), cmath.exp(1j * rad)) if kind == "line" else ArcChart.circle(complex(x, y), rad)
    m = MotionI3.from_arc(arc, -1, 0.7)
    z = complex(p[0], p[1])
    if abs(z - complex(x, y)) < 1e-3:
        return
    np.testing.assert_allclose(m.apply(m.apply(p)), p, atol=1e-9 * max(1, np.abs(p).max()))


arcs = st.sampled_from([
    ArcChart.line(0.5 - 1j, cmath.exp(0.4j)),
    ArcChart.circle(1 + 1j, 1.5),
    ArcChart.analytic("w + i*w^2", (-0.5, 0.5)),
])


@given(arcs, st.floats(0.05, 0.95))
def test_reflection_fixes_arc(arc, u):
    lo, hi = arc.interval if arc.kind == "analytic" else (-2.0, 2.0)
    s = lo + u * (hi - lo)
    z = complex(arc.param(s))
    assert abs(reflect_arc(arc, z) - z) <= 1e-10


@given(arcs, st.floats(0.1, 0.9), st.floats(-0.05, 0.05))
def test_reflection_is_involution(arc, u, off):
    lo, hi = arc.interval if arc.kind == "analytic" else (-2.0, 2.0)
    s = lo + u * (hi - lo)
    z = complex(arc.param(s)) + off * 1j * complex(arc.derivative(s))
    assert abs(reflect_arc(arc, reflect_arc(arc, z)) - z) <= 1e-10
