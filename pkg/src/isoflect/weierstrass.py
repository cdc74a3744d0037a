"""Surfaces from Weierstrass data.

A :class:`WeierstrassData` record holds (F, G), a base point, the deformation
parameter ``c`` and a chart.  Its surface is

    X_c(w) = Re [ offset + int_{w0}^{w} (1 - c G^2, -i (1 + c G^2), 2 G) F dz ]

with the planar components multiplied by ``planar_sign``.  ``c = 0`` gives
the zero mean curvature surfaces of the isotropic space, ``c = 1`` minimal
surfaces in Euclidean space and ``c = -1`` maximal surfaces in Lorentz space.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .expr import ComplexExpr, evaluate
from .quad import DEFAULT_TOL, EXCLUSION_RADIUS, Antiderivative

__all__ = [
    "CHARTS",
    "SurfaceMap",
    "WeierstrassData",
    "ChartError",
    "chart_contains",
    "chart_distance",
    "surface",
    "evaluate_family",
    "conjugate",
    "metric_factor",
    "singular_points",
    "from_harmonic_pair",
    "helicoid",
    "isotropic_catenoid",
    "helicoid_data",
    "catenoid_data",
]

CHARTS = ("half-plane", "disk", "strip")
DEFAULT_BASEPOINT = {"half-plane": 1.0 + 0j, "disk": 0j, "strip": 0.5j * math.pi}


class ChartError(ValueError):
    pass


def chart_contains(chart: str, p) -> np.ndarray:
    """Open-domain membership for the parameter charts.

    ``strip`` and ``blowup`` both use the band 0 < Im p < pi; for ``blowup``
    the parameter is p = r + i theta.
    """
    p = np.asarray(p, dtype=complex)
    if chart == "half-plane":
        return p.imag > 0
    if chart == "disk":
        return np.abs(p) < 1
    if chart in ("strip", "blowup"):
        return (p.imag > 0) & (p.imag < math.pi)
    if chart == "plane":
        return np.isfinite(p)
    raise ChartError(f"unknown chart {chart!r}")


def chart_distance(chart: str, p) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if chart == "half-plane":
        return np.abs(p.imag)
    if chart == "disk":
        return np.abs(1.0 - np.abs(p))
    if chart in ("strip", "blowup"):
        return np.minimum(np.abs(p.imag), np.abs(math.pi - p.imag))
    return np.full(p.shape, np.inf)


class SurfaceMap:
    """Evaluatable chart p -> (x, y, t).

    ``planar(p)`` returns x + i y and ``height(p)`` returns t, both vectorised
    over complex arrays.  For blow-up charts the parameter is p = r + i theta.
    ``domain`` overrides the chart's membership test and ``distance`` the
    distance to the nearest non-removable feature (used by extensions).
    ``cluster`` evaluates a tight group of parameters consistently (one
    quadrature anchor), which finite-difference checks rely on.
    """

    def __init__(self, planar: Callable, height: Callable, chart: str,
                 provenance: str = "weierstrass", domain: Callable | None = None,
                 blowup=None, holomorphic: bool = True, name: str = "",
                 cluster: Callable | None = None, distance: Callable | None = None,
                 singular: Sequence[complex] = ()):
        self.planar = planar
        self.height = height
        self.chart = chart
        self.provenance = provenance
        self._domain = domain
        self.blowup = blowup
        self.holomorphic = holomorphic
        self.name = name
        self._cluster = cluster
        self._distance = distance
        self.singular = tuple(complex(s) for s in singular)

    def contains(self, p) -> np.ndarray:
        if self._domain is not None:
            return np.asarray(self._domain(np.asarray(p, dtype=complex)))
        return chart_contains(self.chart, p)

    def feature_distance(self, p) -> np.ndarray:
        """Distance from ``p`` to the chart boundary or a declared singularity."""
        p = np.asarray(p, dtype=complex)
        if self._distance is not None:
            d = np.asarray(self._distance(p), dtype=float)
        else:
            d = chart_distance(self.chart, p)
        for s in self.singular:
            d = np.minimum(d, np.abs(p - s))
        return d

    def cluster(self, p):
        """Points (N, 3) for a tight cluster of parameters ``p``."""
        if self._cluster is not None:
            return self._cluster(np.asarray(p, dtype=complex).ravel())
        return self(np.asarray(p, dtype=complex).ravel())

    def __call__(self, p):
        """Points (..., 3) as float64 for complex parameters ``p``."""
        pa = np.asarray(p, dtype=complex)
        z = np.asarray(self.planar(pa), dtype=complex)
        t = np.asarray(self.height(pa), dtype=float)
        return np.stack([z.real, z.imag, t], axis=-1)

    def at(self, r, theta):
        """Evaluate a blow-up chart at strip coordinates (r, theta)."""
        return self(np.asarray(r, dtype=float) + 1j * np.asarray(theta, dtype=float))

    def __repr__(self):
        return f"SurfaceMap({self.name or self.provenance!r}, chart={self.chart!r})"


def _in_closure(chart: str, p: complex, eps: float = 1e-12) -> bool:
    if chart == "half-plane":
        return p.imag >= -eps
    if chart == "disk":
        return abs(p) <= 1 + eps
    return -eps <= p.imag <= math.pi + eps


def _as_expr(e) -> ComplexExpr:
    return e if isinstance(e, ComplexExpr) else ex.parse(str(e))


@dataclass(frozen=True)
class WeierstrassData:
    """Weierstrass data (F, G) with base point, family parameter and chart."""

    F: ComplexExpr
    G: ComplexExpr
    basepoint: complex | None = None
    c: float = 0.0
    chart: str = "half-plane"
    singularities: tuple = ()
    offset: tuple = (0j, 0j, 0j)
    planar_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "F", _as_expr(self.F))
        object.__setattr__(self, "G", _as_expr(self.G))
        if self.chart not in CHARTS:
            raise ChartError(f"unknown chart {self.chart!r}")
        bp = DEFAULT_BASEPOINT[self.chart] if self.basepoint is None else complex(self.basepoint)
        object.__setattr__(self, "basepoint", bp)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "singularities", tuple(complex(s) for s in self.singularities))
        off = tuple(complex(v) for v in self.offset)
        if len(off) != 3:
            raise ValueError("offset needs three components")
        object.__setattr__(self, "offset", off)
        if self.planar_sign not in (1, -1):
            raise ValueError("planar_sign must be +1 or -1")
        if not _in_closure(self.chart, bp) or any(abs(bp - s) < EXCLUSION_RADIUS for s in self.singularities):
            raise ChartError(f"base point {bp!r} is not a regular point of the {self.chart} chart")

    @property
    def interior_singularities(self) -> tuple:
        return tuple(s for s in self.singularities if bool(chart_contains(self.chart, s)))

    def integrands(self) -> tuple:
        """(x, y, t) integrands of the deformation family as expressions."""
        F, G = self.F, self.G
        if self.c == 0.0:
            return (F, ex.Neg(ex.Mul(ex.Named("i"), F)), ex.Mul(ex.Mul(ex.Const(2), G), F))
        cG2 = ex.Mul(ex.Const(self.c), ex.Pow(G, ex.Fraction(2)))
        return (
            ex.Mul(ex.Sub(ex.Const(1), cG2), F),
            ex.Neg(ex.Mul(ex.Mul(ex.Named("i"), ex.Add(ex.Const(1), cG2)), F)),
            ex.Mul(ex.Mul(ex.Const(2), G), F),
        )

    def check(self, eps: float = 1e-6, bound: float = 1e8) -> list:
        """Invariant violations as messages (empty when the data is sound)."""
        problems = []
        if not ex.is_analytic(self.F):
            problems.append("F contains non-analytic nodes")
        if not ex.is_analytic(self.G):
            problems.append("G contains non-analytic nodes")
        FG = ex.Mul(self.F, self.G)
        ring = np.exp(1j * np.linspace(0, 2 * np.pi, 8, endpoint=False))
        for s in self.interior_singularities:
            try:
                outer = np.abs(evaluate(FG, s + eps * ring))
                inner = np.abs(evaluate(FG, s + 1e-3 * eps * ring))
            except ex.DomainError:
                problems.append(f"F*G not finite near pole {s!r}")
                continue
            # a removable singularity stays bounded as the ring shrinks; a pole grows
            if (not np.all(np.isfinite(inner)) or np.max(inner) > bound
                    or np.max(inner) > 10.0 * (1.0 + np.max(outer))):
                problems.append(f"F*G not finite near pole {s!r}")
        return problems

    def to_json(self) -> dict:
        return {
            "F": ex.to_string(self.F),
            "G": ex.to_string(self.G),
            "c": self.c,
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "chart": self.chart,
            "singularities": [[s.real, s.imag] for s in self.singularities],
            "offset": [[v.real, v.imag] for v in self.offset],
            "planar_sign": self.planar_sign,
        }


def _require_inside(data: WeierstrassData, p: np.ndarray):
    """Points must lie in the closed chart and off the declared singularities
    (the integrands are analytic up to the boundary elsewhere)."""
    p = np.asarray(p, dtype=complex)
    eps = 1e-12
    if data.chart == "half-plane":
        inside = p.imag >= -eps
    elif data.chart == "disk":
        inside = np.abs(p) <= 1 + eps
    else:
        inside = (p.imag >= -eps) & (p.imag <= math.pi + eps)
    for s in data.singularities:
        inside &= p != s
    if not np.all(inside):
        bad = complex(p[~inside].ravel()[0])
        raise ChartError(f"w={bad!r} is outside the {data.chart} chart")


@functools.lru_cache(maxsize=64)
def _quad_surface(data: WeierstrassData, tol: float) -> SurfaceMap:
    fx, fy, ft = data.integrands()
    off = data.offset
    planar_ad = Antiderivative([fx, fy], data.basepoint, off[:2], data.singularities,
                               tol=tol, radius=EXCLUSION_RADIUS)
    height_ad = Antiderivative(ft, data.basepoint, off[2], data.singularities,
                               tol=tol, radius=EXCLUSION_RADIUS)
    sign = data.planar_sign

    def planar(p):
        p = np.asarray(p, dtype=complex)
        _require_inside(data, np.atleast_1d(p))
        vals = planar_ad(p.ravel())
        z = sign * (vals[0].real + 1j * vals[1].real)
        return z.reshape(p.shape) if p.ndim else complex(z[0])

    def height(p):
        p = np.asarray(p, dtype=complex)
        _require_inside(data, np.atleast_1d(p))
        t = height_ad(p.ravel())[0].real
        return t.reshape(p.shape) if p.ndim else float(t[0])

    def cluster(p):
        _require_inside(data, p)
        xy = planar_ad.cluster(p)
        t = height_ad.cluster(p)[0].real
        return np.stack([sign * xy[0].real, sign * xy[1].real, t], axis=-1)

    surf = SurfaceMap(planar, height, data.chart, provenance="weierstrass",
                      holomorphic=(data.c == 0.0), name=f"X_{data.c:g}", cluster=cluster,
                      singular=data.singularities)
    # anchors are cached in query order: keep evaluation single-threaded
    surf.pure = False
    return surf


def surface(data: WeierstrassData, tol: float = DEFAULT_TOL) -> SurfaceMap:
    """Quadrature-backed surface map of the data (memoised per data record)."""
    return _quad_surface(data, float(tol))


def evaluate_family(data: WeierstrassData, w, tol: float = DEFAULT_TOL):
    """X_c(w) as an array (..., 3)."""
    return surface(data, tol)(w)


def conjugate(data: WeierstrassData) -> WeierstrassData:
    """Conjugate data (iF, G).

    The conjugate surface is taken as X* = -(h*, t*) with h* = i h and t* the
    harmonic conjugate of t: the planar part is i h negated, the height is
    -t*.  Evaluating Re int (1, -i, 2G) iF gives (i h, -t*), hence the planar
    sign flip; the offset follows the integrals (multiplied by i).
    """
    return replace(
        data,
        F=ex.Mul(ex.Named("i"), data.F),
        offset=tuple(1j * v for v in data.offset),
        planar_sign=-data.planar_sign,
    )


def metric_factor(data: WeierstrassData, w):
    """|F(w)|^2, the conformal factor of the induced metric."""
    val = np.abs(evaluate(data.F, w)) ** 2
    return float(val) if np.ndim(w) == 0 else val


def singular_points(data: WeierstrassData, region: Sequence[float], resolution: int = 64,
                    tol: float = 1e-10) -> list:
    """Zeros of F in the rectangle (xmin, xmax, ymin, ymax).

    Grid scan for local minima of |F|, Newton polish with the symbolic F',
    keep roots with |F| <= tol, merged within 1e-8.
    """
    x0, x1, y0, y1 = map(float, region)
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    W = xs[None, :] + 1j * ys[:, None]
    try:
        mag = np.abs(evaluate(data.F, W))
    except ex.DomainError:
        mag = np.abs(np.array([[_safe_eval(data.F, w) for w in row] for row in W]))
    pad = np.pad(mag, 1, constant_values=np.inf)
    is_min = np.ones_like(mag, dtype=bool)
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if dx or dy:
                is_min &= mag <= pad[1 + dy:1 + dy + mag.shape[0], 1 + dx:1 + dx + mag.shape[1]]
    cand = W[is_min & np.isfinite(mag)]
    dF = ex.differentiate(data.F)
    roots: list = []
    for z in cand:
        z = complex(z)
        for _ in range(60):
            try:
                f = complex(evaluate(data.F, z))
                d = complex(evaluate(dF, z))
            except ex.DomainError:
                break
            if f == 0 or d == 0:
                break
            step = f / d
            z -= step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                break
        try:
            fz = abs(evaluate(data.F, z))
        except ex.DomainError:
            continue
        if fz > tol:
            continue
        margin = 1e-9
        if not (x0 - margin <= z.real <= x1 + margin and y0 - margin <= z.imag <= y1 + margin):
            continue
        if all(abs(z - r) > 1e-8 for r in roots):
            roots.append(z)
    roots.sort(key=lambda r: (round(r.real, 9), round(r.imag, 9)))
    return roots


def _safe_eval(e, w):
    try:
        return evaluate(e, w)
    except ex.DomainError:
        return np.inf


def from_harmonic_pair(h: Callable, t: Callable, chart: str, provenance: str = "harmonic-pair",
                       name: str = "") -> SurfaceMap:
    """Surface (Re h, Im h, t) from a holomorphic h and a harmonic t.

    ``h`` may be a :class:`ComplexExpr` or a vectorised callable.
    """
    if isinstance(h, (ComplexExpr, str)):
        h_expr = _as_expr(h)
        planar = lambda p: evaluate(h_expr, p)  # noqa: E731
    else:
        planar = h
    return SurfaceMap(planar, t, chart, provenance=provenance, name=name)


# -- closed-form examples ----------------------------------------------------------


def helicoid_data() -> WeierstrassData:
    """(F, G) = (1, 1/(2 pi i w)) on H; offset makes X(1) = (1, 0, 0)."""
    return WeierstrassData(F=ex.parse("1"), G=ex.parse("1/(2*pi*i*w)"), basepoint=1.0,
                           chart="half-plane", singularities=(0j,), offset=(1.0, -1j, 0.0))


def catenoid_data(c: float = 0.0) -> WeierstrassData:
    """(F, G) = (1/w^2, w): catenoid (c=1), isotropic catenoid (c=0),
    elliptic catenoid (c=-1)."""
    return WeierstrassData(F=ex.parse("1/w^2"), G=ex.parse("w"), basepoint=1.0, c=c,
                           chart="half-plane", singularities=(0j,))


def helicoid() -> SurfaceMap:
    """X(r e^{i theta}) = (r cos theta, r sin theta, theta / pi) on H."""
    return SurfaceMap(lambda p: np.asarray(p, dtype=complex),
                      lambda p: np.angle(np.asarray(p, dtype=complex)) / math.pi,
                      "half-plane", provenance="closed-form", name="helicoid")


def isotropic_catenoid() -> SurfaceMap:
    """X*(r e^{i theta}) = (r sin theta, -r cos theta, log(r) / pi) on H."""
    return SurfaceMap(lambda p: -1j * np.asarray(p, dtype=complex),
                      lambda p: np.log(np.abs(np.asarray(p, dtype=complex))) / math.pi,
                      "half-plane", provenance="closed-form", name="isotropic-catenoid")
