import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from isoflect.expr import parse
from isoflect.quad import integrate_from_basepoint
from isoflect.verify import conformality, harmonicity
from isoflect.weierstrass import (
    ChartError, WeierstrassData, catenoid_data, conjugate, evaluate_family, from_harmonic_pair,
    helicoid, helicoid_data, isotropic_catenoid, metric_factor, singular_points, surface,
)

polar = st.tuples(st.floats(0.05, 3.0), st.floats(0.02, math.pi - 0.02))


def test_helicoid_golden_points():
    X = surface(helicoid_data())
    np.testing.assert_allclose(X(1j), [0, 1, 0.5], atol=1e-10)
    np.testing.assert_allclose(X(2 * cmath.exp(1j * math.pi / 4)),
                               [math.sqrt(2), math.sqrt(2), 0.25], atol=1e-10)


def test_zero_at_basepoint():
    for data in (catenoid_data(0.0), catenoid_data(1.0), catenoid_data(-1.0)):
        np.testing.assert_array_equal(evaluate_family(data, data.basepoint), [0, 0, 0])


def test_conjugate_of_helicoid_is_isotropic_catenoid():
    Xs = surface(conjugate(helicoid_data()))
    ref = isotropic_catenoid()
    w = np.array([0.5j, 2 * cmath.exp(0.3j), 0.1 * cmath.exp(2.9j)])
    np.testing.assert_allclose(Xs(w), ref(w), atol=1e-9)


def test_double_conjugate_is_point_reflection():
    # with zero offset the base value is the origin, so X** = 2 X(w0) - X = -X
    data = WeierstrassData(F="exp(w)", G="w + 1", basepoint=1j)
    X, X2 = surface(data), surface(conjugate(conjugate(data)))
    assert conjugate(conjugate(data)).planar_sign == 1
    w = np.array([0.5 + 0.5j, -1 + 2j, 2j])
    base = X(data.basepoint)
    np.testing.assert_allclose(X2(w), 2 * base - X(w), atol=1e-9)


def test_double_conjugate_negates_with_offset():
    X, X2 = surface(helicoid_data()), surface(conjugate(conjugate(helicoid_data())))
    w = np.array([1j, 0.4 + 2j])
    np.testing.assert_allclose(X2(w), -X(w), atol=1e-9)


def test_metric_factor():
    assert metric_factor(helicoid_data(), 0.3 + 2j) == 1
    assert metric_factor(WeierstrassData(F="w", G="1"), 2j) == pytest.approx(4)


def test_singular_points():
    assert singular_points(helicoid_data(), (-1, 1, -1, 1)) == []
    roots = singular_points(WeierstrassData(F="w", G="1"), (-1, 1, -1, 1))
    assert len(roots) == 1 and abs(roots[0]) < 1e-12
    roots = singular_points(WeierstrassData(F="w^2 - 1/4", G="1"), (-1, 1, -1, 1))
    assert len(roots) == 2
    assert abs(roots[0] + 0.5) < 1e-8 and abs(roots[1] - 0.5) < 1e-8


def test_flat_plane_from_pair():
    X = from_harmonic_pair("w", lambda p: np.zeros(np.shape(p)), "half-plane")
    w = np.array([1j, 2 + 3j])
    np.testing.assert_allclose(X(w), [[0, 1, 0], [2, 3, 0]])


def test_helicoid_from_pair_matches_closed_form():
    X = from_harmonic_pair("w", lambda p: np.angle(p) / math.pi, "half-plane")
    w = np.array([1j, 2 + 3j, -1 + 0.1j])
    np.testing.assert_allclose(X(w), helicoid()(w), atol=1e-15)


def test_chart_checks():
    with pytest.raises(ChartError):
        WeierstrassData(F="1", G="w", basepoint=-1j)
    X = surface(helicoid_data())
    with pytest.raises(ChartError):
        X(-1j)
    with pytest.raises(ChartError):
        X(0j)


def test_data_check_pole_of_fg():
    good = WeierstrassData(F="w^2", G="1/w^2", chart="disk", basepoint=0.5, singularities=[0])
    bad = WeierstrassData(F="1", G="1/w", chart="disk", basepoint=0.5, singularities=[0])
    assert good.check() == []
    assert bad.check()
    assert WeierstrassData(F="conj(w)", G="w").check()


def test_data_json():
    doc = helicoid_data().to_json()
    assert doc["G"] and doc["chart"] == "half-plane" and doc["planar_sign"] == 1


@given(polar)
def test_reduction_c0_matches_direct_integral(rt):
    r, th = rt
    w = r * cmath.exp(1j * th)
    data = catenoid_data(0.0)
    got = evaluate_family(data, w)
    integrals = [integrate_from_basepoint(parse(e), 1, w, [0])
                 for e in ("1/w^2", "-i/w^2", "2/w")]
    ref = [v.real for v in integrals]
    np.testing.assert_allclose(got, ref, atol=2e-10 * max(1, max(map(abs, ref))))


@given(polar, st.sampled_from([-1.0, 0.0, 1.0]))
def test_catenoid_family_coordinates(rt, c):
    # closed forms: int w^-2 = 1 - 1/w, int c G^2 F = c (w - 1), int 2 G F = 2 log w
    r, th = rt
    w = r * cmath.exp(1j * th)
    a = 1 - 1 / w
    b = c * (w - 1)
    ref = [(a - b).real, (-1j * (a + b)).real, (2 * cmath.log(w)).real]
    got = evaluate_family(catenoid_data(c), w)
    np.testing.assert_allclose(got, ref, atol=1e-9 * max(1, abs(a)))


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_quadrature_surfaces_harmonic(c):
    rng = np.random.default_rng(3)
    r = rng.uniform(0.3, 2.5, 40)
    th = rng.uniform(0.2, math.pi - 0.2, 40)
    res = harmonicity(surface(catenoid_data(c)), r * np.exp(1j * th))
    assert res.passed, res


def test_helicoid_quadrature_conformal():
    rng = np.random.default_rng(5)
    w = rng.uniform(0.3, 2.5, 30) * np.exp(1j * rng.uniform(0.2, 2.9, 30))
    res = conformality(surface(helicoid_data()), w)
    assert res.passed, res
