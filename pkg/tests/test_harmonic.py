import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from isoflect.harmonic import (
    BlowUpChart, BoundaryData, BoundaryPointError, complex_potential, conjugate_harmonic,
    extend_blowup, halfplane_to_disk, poisson, poisson_disk, poisson_halfplane,
)

STEP = BoundaryData.from_jumps("half-plane", [0], [0, 1])
HELICOID = BoundaryData.from_jumps("half-plane", [0], [1, 0])
BUMP = BoundaryData.from_jumps("half-plane", [-1, 1], [0, 1, 0])
TWO_ARC = BoundaryData("disk", ((0, math.pi), (math.pi, 2 * math.pi)), (1, 0))
ALTERNATING = BoundaryData.from_jumps(
    "disk", [k * math.pi / 2 + math.pi / 4 for k in range(4)], [1, 0, 1, 0])


def helicoid_height(p):
    return np.angle(np.asarray(p, dtype=complex)) / math.pi


def test_step_data():
    for th in (0.3, 1.0, 2.5):
        assert poisson_halfplane(STEP, 2 * cmath.exp(1j * th)) == pytest.approx(1 - th / math.pi, abs=1e-15)
    assert poisson_halfplane(STEP, 1j) == pytest.approx(0.5, abs=1e-15)


def test_helicoid_heights():
    assert poisson_halfplane(HELICOID, cmath.exp(1j * math.pi / 3)) == pytest.approx(1 / 3, abs=1e-15)


def test_bump_at_i():
    # Poisson kernel mass of [-1, 1] seen from i; quadrature gives exactly 1/2
    assert poisson_halfplane(BUMP, 1j) == pytest.approx(0.5, abs=1e-15)


def test_disk_two_arcs_against_frozen_quadrature():
    val = poisson_disk(TWO_ARC, 0.5j)
    assert 0.5 < val < 1
    assert abs(val - 0.79516723530086655) < 1e-10


def test_disk_alternating():
    assert poisson_disk(ALTERNATING, 0) == pytest.approx(0.5, abs=1e-15)
    # arc (pi/4, 3pi/4) carries 1, arc (-pi/4, pi/4) carries 0
    assert poisson_disk(ALTERNATING, (1 - 1e-9) * 1j) == pytest.approx(1, abs=1e-8)
    assert poisson_disk(ALTERNATING, (1 - 1e-9) * 1.0) == pytest.approx(0, abs=1e-8)


def test_single_arc_disk_is_constant():
    bd = BoundaryData("disk", ((0, 2 * math.pi),), (0.7,))
    assert poisson_disk(bd, 0.3 + 0.1j) == pytest.approx(0.7)


def test_validation():
    with pytest.raises(ValueError):
        BoundaryData("half-plane", ((-math.inf, 0), (1, math.inf)), (0, 1))
    with pytest.raises(ValueError):
        BoundaryData("disk", ((0, 1), (1, 2)), (0, 1))
    with pytest.raises(ValueError):
        BoundaryData("annulus", ((0, 1),), (0,))
    with pytest.raises(BoundaryPointError):
        poisson_halfplane(STEP, 1.0)
    with pytest.raises(BoundaryPointError):
        poisson_disk(TWO_ARC, 1.0)


def test_json_roundtrip():
    for bd in (BUMP, TWO_ARC):
        assert BoundaryData.from_json(bd.to_json()) == bd


def test_conjugate_harmonic_helicoid_diverges():
    # t* = -(1/pi) log r + const for the helicoid data
    vals = [conjugate_harmonic(HELICOID, r * 1j) for r in (1.0, 1e-2, 1e-4)]
    assert vals[0] == pytest.approx(0, abs=1e-15)
    assert vals[1] == pytest.approx(-math.log(1e-2) / math.pi)
    assert abs(conjugate_harmonic(HELICOID, 1e-40j)) > 10


def test_conjugate_of_constant_data():
    bd = BoundaryData.from_jumps("half-plane", [], [2.0])
    w = np.array([1j, 3 + 0.1j, -2 + 5j])
    np.testing.assert_allclose(conjugate_harmonic(bd, w), 0.0)


@pytest.mark.parametrize("bd", [BUMP, TWO_ARC, ALTERNATING])
def test_complex_potential_is_holomorphic(bd):
    w = 0.2 + 0.4j
    h = 1e-4
    f = lambda z: complex_potential(bd, z)  # noqa: E731
    dx = (f(w + h) - f(w - h)) / (2 * h)
    dy = (f(w + 1j * h) - f(w - 1j * h)) / (2 * h)
    assert abs(dy - 1j * dx) < 1e-7


def test_halfplane_to_disk():
    w0 = cmath.exp(0.7j)
    assert abs(halfplane_to_disk(0, w0) - w0) < 1e-15
    z = np.array([1j, 2 + 0.5j, -3 + 0.01j])
    assert np.all(np.abs(halfplane_to_disk(z, w0)) < 1)


CHART = BlowUpChart(0, 1.0, 0.0)


def test_extend_blowup_values():
    assert extend_blowup(helicoid_height, CHART, 0.0, math.pi / 2) == pytest.approx(0.5)
    assert extend_blowup(helicoid_height, CHART, -1.0, math.pi / 4) == pytest.approx(0.25)
    r, th = 0.7, 1.1
    assert extend_blowup(helicoid_height, CHART, r, th) == helicoid_height(r * cmath.exp(1j * th))


def test_extend_blowup_rejects_bad_theta():
    with pytest.raises(ValueError):
        extend_blowup(helicoid_height, CHART, 1.0, 0.0)


def test_blowup_pullback_disk():
    ch = BlowUpChart(cmath.exp(1j * math.pi / 4), 1.0, 0.0, chart="disk")
    local = ch.pullback(ALTERNATING)
    z = np.array([0.5j, 1 + 1j, -2 + 0.1j])
    np.testing.assert_allclose(poisson_halfplane(local, z), poisson_disk(ALTERNATING, ch.to_chart(z)),
                               atol=1e-12)


# -- properties ------------------------------------------------------------------------

jumps_st = st.lists(st.floats(-5, 5), min_size=1, max_size=5, unique=True).map(sorted)


@st.composite
def halfplane_data(draw):
    jumps = draw(jumps_st)
    if any(b - a < 1e-3 for a, b in zip(jumps, jumps[1:])):
        jumps = [jumps[0]]
    values = draw(st.lists(st.floats(-3, 3), min_size=len(jumps) + 1, max_size=len(jumps) + 1))
    return BoundaryData.from_jumps("half-plane", jumps, values)


@st.composite
def disk_data(draw):
    k = draw(st.integers(2, 6))
    cuts = sorted(draw(st.lists(st.floats(0, 2 * math.pi - 0.01), min_size=k, max_size=k, unique=True)))
    if any(b - a < 1e-3 for a, b in zip(cuts, cuts[1:])):
        cuts = [0.0, 1.0, 3.0]
    values = draw(st.lists(st.floats(-3, 3), min_size=len(cuts), max_size=len(cuts)))
    return BoundaryData.from_jumps("disk", cuts, values)


hp_point = st.tuples(st.floats(-6, 6), st.floats(1e-3, 6)).map(lambda p: complex(*p))
disk_point = st.tuples(st.floats(0, 0.999), st.floats(0, 2 * math.pi)).map(lambda p: p[0] * cmath.exp(1j * p[1]))


@given(halfplane_data(), hp_point)
def test_max_principle_halfplane(bd, w):
    lo, hi = bd.bounds
    assert lo - 1e-12 <= poisson(bd, w) <= hi + 1e-12


@given(disk_data(), disk_point)
def test_max_principle_disk(bd, w):
    lo, hi = bd.bounds
    assert lo - 1e-12 <= poisson(bd, w) <= hi + 1e-12


def _total_jump(bd):
    total = sum(abs(b - a) for a, b in zip(bd.values, bd.values[1:]))
    if bd.chart == "disk":
        total += abs(bd.values[0] - bd.values[-1])
    return total


DIST = 1e-6


def test_boundary_recovery_far_from_jumps():
    for s in (-60.0, 60.0):
        assert abs(poisson(HELICOID, complex(s, DIST)) - HELICOID.value_at(s)) <= 1e-8


@given(halfplane_data(), st.floats(-6, 6))
def test_boundary_recovery_halfplane(bd, s):
    gap = min(abs(s - j) for j in bd.jumps)
    if gap < 10 * DIST:
        return
    err = abs(poisson(bd, complex(s, DIST)) - bd.value_at(s))
    assert err <= _total_jump(bd) * DIST / (math.pi * gap) * (1 + 1e-6) + 1e-14


@given(disk_data(), st.floats(0, 2 * math.pi))
def test_boundary_recovery_disk(bd, phi):
    gap = min(abs(cmath.exp(1j * phi) - cmath.exp(1j * j)) for j in bd.jumps)
    if gap < 10 * DIST:
        return
    err = abs(poisson(bd, (1 - DIST) * cmath.exp(1j * phi)) - bd.value_at(phi))
    assert err <= _total_jump(bd) * DIST / (math.pi * gap) * (1 + 1e-6) + 1e-14


def _halfplane_quadrature(bd, w):
    xi, eta = w.real, w.imag
    total = 0.0
    for (lo, hi), v in zip(bd.arcs, bd.values):
        val, _ = integrate.quad(lambda s: eta / ((xi - s) ** 2 + eta ** 2) / math.pi, lo, hi,
                                epsabs=1e-13, epsrel=1e-13, limit=200)
        total += v * val
    return total


@given(halfplane_data(), st.tuples(st.floats(-3, 3), st.floats(0.1, 3)).map(lambda p: complex(*p)))
def test_closed_form_matches_quadrature(bd, w):
    assert abs(poisson(bd, w) - _halfplane_quadrature(bd, w)) <= 1e-9


@given(halfplane_data(), st.floats(-2, 2), st.floats(0.05, math.pi - 0.05))
def test_reflection_relation_identity(bd, r, th):
    ch = BlowUpChart(0, 1.0, 0.0)
    t = lambda z: poisson_halfplane(bd, z)  # noqa: E731
    # exact by construction: the r < 0 branch is a + b minus the mirrored value
    th2 = math.pi - th
    left = extend_blowup(t, ch, -r, th2)
    if r > 0:
        assert left == ch.a + ch.b - extend_blowup(t, ch, r, math.pi - th2)
    elif r < 0:
        assert extend_blowup(t, ch, r, th) == ch.a + ch.b - extend_blowup(t, ch, -r, math.pi - th)
    else:
        assert left + extend_blowup(t, ch, 0.0, math.pi - th2) == pytest.approx(ch.a + ch.b, abs=1e-15)


@given(st.floats(0.2, math.pi - 0.2))
def test_blowup_one_sided_derivatives_match(th):
    # jump at 0 between a = 1 (left) and b = 0, with further jumps away from 0
    bd = BoundaryData.from_jumps("half-plane", [-2, 0, 3], [0.3, 1, 0, 0.7])
    ch = BlowUpChart(0, 1.0, 0.0)
    t = lambda z: poisson_halfplane(bd, z)  # noqa: E731
    h = 1e-4
    f = lambda r: extend_blowup(t, ch, r, th)  # noqa: E731
    right = (-3 * f(0.0) + 4 * f(h) - f(2 * h)) / (2 * h)
    left = (3 * f(0.0) - 4 * f(-h) + f(-2 * h)) / (2 * h)
    assert abs(right - left) <= 1e-5
