"""Reflections and extensions of zero mean curvature surfaces.

Planar reflections R_G = gamma o conj o gamma^-1 across lines, circles and
analytic arcs; isometries and isotropic shears of I^3 (:class:`MotionI3`);
continuation across horizontal boundary arcs and across isotropic lines
(through the blow-up strip); and breadth-first orbit tilings.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .expr import ComplexExpr, evaluate
from .harmonic import BlowUpChart, extend_blowup, poisson_halfplane
from .weierstrass import SurfaceMap, chart_contains

__all__ = [
    "ArcChart",
    "MotionI3",
    "ReflectionError",
    "ValidationError",
    "IsotropicSegment",
    "TilingResult",
    "reflect_arc",
    "reflect_horizontal",
    "isotropic_shear",
    "extend_isotropic",
    "cluster_set",
    "reflect_parallel_lines",
    "orbit_tiling",
    "period_basis",
]


class ReflectionError(ValueError):
    """Point outside the reflection neighbourhood of an arc."""


class ValidationError(ValueError):
    """A surface does not meet the preconditions of an extension."""


# -- arcs ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArcChart:
    """Regular analytic arc Gamma with a conformal parametrisation gamma.

    ``line``: gamma(s) = point + s * direction (|direction| = 1).
    ``circle``: gamma(s) = point + radius * e^{i s}.
    ``analytic``: gamma given by an expression in ``w`` on ``interval``.
    """

    kind: str
    point: complex = 0j
    direction: complex = 1 + 0j
    radius: float = 1.0
    gamma: ComplexExpr | None = None
    interval: tuple = (-1.0, 1.0)
    newton_steps: int = 20

    def __post_init__(self):
        object.__setattr__(self, "point", complex(self.point))
        if self.kind == "line":
            d = complex(self.direction)
            if d == 0:
                raise ValueError("line direction must be nonzero")
            object.__setattr__(self, "direction", d / abs(d))
        elif self.kind == "circle":
            if not self.radius > 0:
                raise ValueError("circle radius must be positive")
            object.__setattr__(self, "radius", float(self.radius))
        elif self.kind == "analytic":
            g = self.gamma
            if g is None:
                raise ValueError("analytic arc needs an expression")
            if not isinstance(g, ComplexExpr):
                g = ex.parse(str(g))
                object.__setattr__(self, "gamma", g)
            if not ex.is_analytic(g):
                raise ValueError("arc expression must be analytic")
            lo, hi = map(float, self.interval)
            if not lo < hi:
                raise ValueError("empty arc interval")
            object.__setattr__(self, "interval", (lo, hi))
        else:
            raise ValueError(f"unknown arc kind {self.kind!r}")

    @classmethod
    def line(cls, point: complex, direction: complex) -> "ArcChart":
        return cls("line", point=point, direction=direction)

    @classmethod
    def circle(cls, center: complex, radius: float) -> "ArcChart":
        return cls("circle", point=center, radius=radius)

    @classmethod
    def analytic(cls, gamma, interval=(-1.0, 1.0)) -> "ArcChart":
        return cls("analytic", gamma=gamma, interval=tuple(interval))

    @functools.cached_property
    def _dgamma(self):
        return ex.differentiate(self.gamma)

    @functools.cached_property
    def _samples(self):
        s = np.linspace(*self.interval, 256)
        return s, evaluate(self.gamma, s + 0j)

    def param(self, s):
        """gamma(s)."""
        s = np.asarray(s, dtype=complex)
        if self.kind == "line":
            return self.point + s * self.direction
        if self.kind == "circle":
            return self.point + self.radius * np.exp(1j * s)
        return evaluate(self.gamma, s)

    def derivative(self, s):
        s = np.asarray(s, dtype=complex)
        if self.kind == "line":
            return np.full(s.shape, self.direction)
        if self.kind == "circle":
            return 1j * self.radius * np.exp(1j * s)
        return evaluate(self._dgamma, s)

    def inverse(self, z):
        """gamma^-1(z) as a complex parameter (local inverse near the arc)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "line":
            return (z - self.point) / self.direction
        if self.kind == "circle":
            u = (z - self.point) / self.radius
            if np.any(u == 0):
                raise ReflectionError("the circle centre has no reflection")
            return -1j * np.log(u)
        return self._newton(z)

    def _newton(self, z):
        s, g = self._samples
        flat = z.ravel()
        u = s[np.argmin(np.abs(flat[:, None] - g[None, :]), axis=1)].astype(complex)
        done = np.zeros(flat.shape, dtype=bool)
        for _ in range(self.newton_steps):
            live = ~done
            if not live.any():
                break
            r = evaluate(self.gamma, u[live]) - flat[live]
            d = evaluate(self._dgamma, u[live])
            step = r / d
            u[live] = u[live] - step
            conv = np.abs(step) <= 1e-15 * (1.0 + np.abs(u[live]))
            idx = np.flatnonzero(live)
            done[idx[conv]] = True
        resid = np.abs(evaluate(self.gamma, u) - flat)
        bad = ~done & (resid > 1e-13 * (1.0 + np.abs(flat)))
        if np.any(bad):
            raise ReflectionError(
                f"z={complex(flat[bad][0])!r} is outside the reflection neighbourhood")
        return u.reshape(z.shape)

    def reflect(self, z):
        """R_Gamma(z)."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "line":
            return self.point + self.direction ** 2 * np.conj(z - self.point)
        if self.kind == "circle":
            dz = z - self.point
            if np.any(dz == 0):
                raise ReflectionError("the circle centre has no reflection")
            return self.point + self.radius ** 2 / np.conj(dz)
        return evaluate(self.gamma, np.conj(self._newton(z)))

    def is_regular(self, samples: int = 256) -> bool:
        if self.kind != "analytic":
            return True
        s = np.linspace(*self.interval, samples) + 0j
        return bool(np.all(np.abs(evaluate(self._dgamma, s)) > 1e-12))

    def to_json(self) -> dict:
        if self.kind == "line":
            return {"kind": "line", "point": [self.point.real, self.point.imag],
                    "direction": [self.direction.real, self.direction.imag]}
        if self.kind == "circle":
            return {"kind": "circle", "center": [self.point.real, self.point.imag],
                    "radius": self.radius}
        return {"kind": "analytic", "gamma": ex.to_string(self.gamma),
                "interval": list(self.interval)}

    @classmethod
    def from_json(cls, doc: dict) -> "ArcChart":
        kind = doc.get("kind")
        if kind == "line":
            return cls.line(complex(*doc["point"]), complex(*doc["direction"]))
        if kind == "circle":
            return cls.circle(complex(*doc["center"]), float(doc["radius"]))
        if kind == "analytic":
            return cls.analytic(doc["gamma"], tuple(doc.get("interval", (-1.0, 1.0))))
        raise ValueError(f"unknown arc kind {kind!r}")


def reflect_arc(arc: ArcChart, z):
    out = arc.reflect(z)
    return complex(out) if np.ndim(z) == 0 else out


# -- motions ------------------------------------------------------------------------


def _key(x: float) -> int:
    v = int(round(x * 1e9))
    return 0 if v == 0 else v


@dataclass(frozen=True)
class MotionI3:
    """(z, t) -> (P(z), eps * t + delta + Re(conj(kappa) * z)).

    P(z) = (a z' + b) / (c z' + d) with z' = conj(z) when ``conj`` is set.
    The shear term ``kappa`` is only allowed for affine P (c = 0).
    """

    matrix: tuple = (1 + 0j, 0j, 0j, 1 + 0j)
    conj: bool = False
    eps: int = 1
    delta: float = 0.0
    kappa: complex = 0j

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in self.matrix)
        if a * d - b * c == 0:
            raise ValueError("singular Moebius matrix")
        if c == 0:
            a, b, d = a / d, b / d, 1 + 0j
        object.__setattr__(self, "matrix", (a, b, c, d))
        object.__setattr__(self, "conj", bool(self.conj))
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "kappa", complex(self.kappa))
        if self.kappa != 0 and c != 0:
            raise ValueError("shear requires an affine planar part")

    # constructors
    @classmethod
    def identity(cls) -> "MotionI3":
        return cls()

    @classmethod
    def translation(cls, v) -> "MotionI3":
        x, y, t = (float(c) for c in v)
        return cls(matrix=(1, complex(x, y), 0, 1), delta=t)

    @classmethod
    def planar_reflection(cls, point: complex, direction: complex, eps: int = 1,
                          delta: float = 0.0) -> "MotionI3":
        u = complex(direction) / abs(direction)
        p = complex(point)
        return cls(matrix=(u * u, p - u * u * p.conjugate(), 0, 1), conj=True, eps=eps, delta=delta)

    @classmethod
    def rotation_about_line(cls, point: complex, direction: complex, height: float) -> "MotionI3":
        """180 degree rotation about the horizontal line through (point, height)."""
        return cls.planar_reflection(point, direction, eps=-1, delta=2.0 * height)

    @classmethod
    def circle_inversion(cls, center: complex, radius: float, eps: int = 1,
                         delta: float = 0.0) -> "MotionI3":
        c = complex(center)
        return cls(matrix=(c, radius ** 2 - abs(c) ** 2, 1, -c.conjugate()), conj=True,
                   eps=eps, delta=delta)

    @classmethod
    def vertical_reflection(cls, height: float) -> "MotionI3":
        return cls(eps=-1, delta=2.0 * height)

    @classmethod
    def shear(cls, a: float, b: float, c: float) -> "MotionI3":
        """(x, y, t) -> (x, y, t - a x - b y - c)."""
        return cls(delta=-c, kappa=complex(-a, -b))

    @classmethod
    def from_arc(cls, arc: ArcChart, eps: int, delta: float) -> "MotionI3":
        if arc.kind == "line":
            return cls.planar_reflection(arc.point, arc.direction, eps, delta)
        if arc.kind == "circle":
            return cls.circle_inversion(arc.point, arc.radius, eps, delta)
        raise ValueError("analytic arcs have no Moebius reflection")

    # evaluation
    @property
    def affine(self) -> bool:
        return self.matrix[2] == 0

    def planar(self, z):
        a, b, c, d = self.matrix
        z = np.asarray(z, dtype=complex)
        zz = np.conj(z) if self.conj else z
        if c == 0:
            return a * zz + b
        return (a * zz + b) / (c * zz + d)

    def vertical(self, z, t):
        z = np.asarray(z, dtype=complex)
        out = self.eps * np.asarray(t, dtype=float) + self.delta
        if self.kappa != 0:
            out = out + np.real(np.conj(self.kappa) * z)
        return out

    def apply(self, points):
        """Image of points (..., 3)."""
        p = np.asarray(points, dtype=float)
        z = p[..., 0] + 1j * p[..., 1]
        w = self.planar(z)
        t = self.vertical(z, p[..., 2])
        return np.stack([w.real, w.imag, t], axis=-1)

    __call__ = apply

    # group structure
    def compose(self, other: "MotionI3") -> "MotionI3":
        """self o other (``other`` applied first)."""
        m1 = np.array(other.matrix).reshape(2, 2)
        m2 = np.array(self.matrix).reshape(2, 2)
        m = m2 @ (np.conj(m1) if self.conj else m1)
        kappa = self.eps * other.kappa
        delta = self.eps * other.delta + self.delta
        if self.kappa != 0:
            if not other.affine:
                raise ValueError("shear composed with a non-affine motion")
            alpha, beta = other.matrix[0], other.matrix[1]
            kappa += (np.conj(self.kappa) * alpha) if other.conj else (self.kappa * np.conj(alpha))
            delta += float(np.real(np.conj(self.kappa) * beta))
        return MotionI3(matrix=tuple(m.ravel()), conj=self.conj != other.conj,
                        eps=self.eps * other.eps, delta=delta, kappa=kappa)

    def inverse(self) -> "MotionI3":
        a, b, c, d = self.matrix
        adj = np.array([d, -b, -c, a])
        if self.conj:
            adj = np.conj(adj)
        pinv = MotionI3(matrix=tuple(adj), conj=self.conj)
        # t = eps * (t' - delta - Re(conj(kappa) z)),  z = pinv(z')
        vert = MotionI3(eps=self.eps, delta=-self.eps * self.delta, kappa=-self.eps * self.kappa)
        return vert.compose(pinv) if self.kappa != 0 else MotionI3(
            matrix=pinv.matrix, conj=self.conj, eps=self.eps, delta=-self.eps * self.delta)

    def translation_vector(self, tol: float = 1e-9):
        """(x, y, t) if this motion is a pure translation, else None."""
        a, b, c, d = self.matrix
        if self.conj or self.eps != 1 or abs(c) > tol or abs(self.kappa) > tol:
            return None
        if abs(a / d - 1) > tol:
            return None
        v = b / d
        return np.array([v.real, v.imag, self.delta])

    def is_identity(self, tol: float = 1e-9) -> bool:
        v = self.translation_vector(tol)
        return v is not None and float(np.max(np.abs(v))) <= tol

    def is_planar_isometry(self, tol: float = 1e-12) -> bool:
        return self.affine and abs(abs(self.matrix[0]) - 1) <= tol

    def fingerprint(self) -> tuple:
        """Planar images of 0, 1, i with (eps, delta, kappa), rounded to 1e-9."""
        probes = self.planar(np.array([0, 1, 1j]))
        vals = [*probes.real, *probes.imag, self.delta, self.kappa.real, self.kappa.imag]
        return (self.eps, *(_key(v) for v in vals))

    def to_json(self) -> dict:
        a, b, c, d = self.matrix
        kind = ("translation" if self.translation_vector() is not None
                else "affine" if self.affine else "moebius")
        return {
            "planar": {
                "kind": kind,
                "conj": self.conj,
                "matrix": [[v.real, v.imag] for v in (a, b, c, d)],
            },
            "eps": self.eps,
            "delta": self.delta,
            "shear": [self.kappa.real, self.kappa.imag],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MotionI3":
        pl = doc["planar"]
        return cls(matrix=tuple(complex(*v) for v in pl["matrix"]), conj=bool(pl["conj"]),
                   eps=int(doc["eps"]), delta=float(doc["delta"]),
                   kappa=complex(*doc.get("shear", (0.0, 0.0))))


def isotropic_shear(a: float, b: float, c: float, p) -> np.ndarray:
    """(x, y, t) -> (x, y, t - a x - b y - c)."""
    p = np.asarray(p, dtype=float)
    out = p.copy()
    out[..., 2] = p[..., 2] - a * p[..., 0] - b * p[..., 1] - c
    return out


# -- horizontal reflection ------------------------------------------------------------


def _domain_reflection(chart: str) -> Callable:
    if chart == "half-plane":
        return np.conj
    if chart == "disk":
        return lambda p: 1.0 / np.conj(p)
    raise ValueError(f"horizontal reflection is defined on half-plane and disk charts, not {chart!r}")


def _seam_points(chart: str, seam, count: int):
    lo, hi = seam
    if chart == "half-plane":
        if math.isfinite(lo) and math.isfinite(hi):
            a, b = lo, hi
        elif math.isfinite(lo):
            a, b = lo, lo + 10.0
        elif math.isfinite(hi):
            a, b = hi - 10.0, hi
        else:
            a, b = -5.0, 5.0
        s = np.linspace(a, b, count + 2)[1:-1]
        return s + 0j, np.full(count, 1j)
    s = np.linspace(lo, hi, count + 2)[1:-1]
    z = np.exp(1j * s)
    return z, -z


def _on_seam(chart: str, seam, p):
    lo, hi = seam
    if chart == "half-plane":
        return (p.imag == 0) & (p.real > lo) & (p.real < hi)
    ang = np.mod(np.angle(p) - lo, 2 * math.pi) + lo
    return (np.abs(np.abs(p) - 1) <= 4e-16) & (ang > lo) & (ang < hi)


def _seam_distance(chart: str, seam, p):
    """Distance to the chart boundary with the open seam removed."""
    lo, hi = seam
    if chart == "half-plane":
        ends = [e for e in (lo, hi) if math.isfinite(e)]
        inside = (p.real > lo) & (p.real < hi)
        d_end = np.min([np.abs(p - e) for e in ends], axis=0) if ends else np.full(p.shape, np.inf)
        return np.where(inside, d_end, np.minimum(np.abs(p.imag), d_end))
    if hi - lo >= 2 * math.pi:
        return np.full(p.shape, np.inf)
    ang = np.mod(np.angle(p) - lo, 2 * math.pi) + lo
    inside = (ang > lo) & (ang < hi)
    d_end = np.minimum(np.abs(p - np.exp(1j * lo)), np.abs(p - np.exp(1j * hi)))
    return np.where(inside, d_end, np.minimum(np.abs(1 - np.abs(p)), d_end))


def reflect_horizontal(surface: SurfaceMap, arc: ArcChart, plane_height: float,
                       seam=None, tol: float = 1e-6, samples: int = 16) -> SurfaceMap:
    """Continue ``surface`` across a horizontal boundary arc.

    ``seam`` is the parameter interval of the chart boundary that maps onto
    Gamma at height ``plane_height`` (a real interval for the half-plane, an
    angle interval for the disk; default the whole boundary).  The extension
    satisfies X(w*) = (R_Gamma(h(w)), 2 * plane_height - t(w)) where w* is
    the mirror of w across the chart boundary.
    """
    chart = surface.chart
    mirror = _domain_reflection(chart)
    if seam is None:
        seam = (-math.inf, math.inf) if chart == "half-plane" else (0.0, 2 * math.pi)
    seam = (float(seam[0]), float(seam[1]))
    H = float(plane_height)

    q, inward = _seam_points(chart, seam, samples)
    probe = q + 1e-9 * inward
    pts = surface(probe)
    h = pts[..., 0] + 1j * pts[..., 1]
    dt = np.max(np.abs(pts[..., 2] - H))
    if dt > tol:
        raise ValidationError(f"boundary height deviates from {H} by {dt:.3g} on the seam")
    dz = np.max(np.abs(arc.reflect(h) - h))
    if dz > max(tol, 1e-8):
        raise ValidationError(f"projected boundary leaves the arc by {dz:.3g}")

    def split(p):
        p = np.asarray(p, dtype=complex)
        inside = np.asarray(surface.contains(p), dtype=bool)
        on = ~inside & _on_seam(chart, seam, p)
        out = ~inside & ~on
        if np.any(out):
            back = mirror(p[out])
            if not np.all(surface.contains(back)):
                raise ValueError("parameter outside the doubled chart")
        return inside, on, out

    def planar(p):
        p = np.asarray(p, dtype=complex)
        inside, on, out = split(p)
        res = np.empty(p.shape, dtype=complex)
        res[inside | on] = surface.planar(p[inside | on])
        if np.any(out):
            res[out] = arc.reflect(surface.planar(mirror(p[out])))
        return res if p.ndim else complex(res)

    def height(p):
        p = np.asarray(p, dtype=complex)
        inside, on, out = split(p)
        res = np.empty(p.shape)
        res[inside | on] = surface.height(p[inside | on])
        if np.any(out):
            res[out] = 2 * H - np.asarray(surface.height(mirror(p[out])))
        return res if p.ndim else float(res)

    def cluster(p):
        inside, on, out = split(p)
        folded = np.where(out, mirror(p), p)
        vals = surface.cluster(folded)
        z = vals[:, 0] + 1j * vals[:, 1]
        z = np.where(out, arc.reflect(z), z)
        t = np.where(out, 2 * H - vals[:, 2], vals[:, 2])
        return np.stack([z.real, z.imag, t], axis=-1)

    def domain(p):
        inside = np.asarray(surface.contains(p), dtype=bool)
        return inside | _on_seam(chart, seam, p) | np.asarray(surface.contains(mirror(p)), dtype=bool)

    singular = list(surface.singular)
    singular += [complex(mirror(np.complex128(s))) for s in surface.singular if s != 0 or chart != "disk"]
    ext = SurfaceMap(planar, height, chart, provenance="reflected copy", domain=domain,
                     holomorphic=False, name=f"{surface.name}+horizontal", cluster=cluster,
                     distance=lambda p: _seam_distance(chart, seam, p), singular=singular)
    ext.motion = MotionI3.from_arc(arc, -1, 2 * H) if arc.kind != "analytic" else None
    ext.base = surface
    ext.arc = arc
    return ext


# -- isotropic lines --------------------------------------------------------------------


def _planar_limit(surface: SurfaceMap, jump: BlowUpChart) -> complex:
    """h at the jump point: direct when the evaluator accepts it, else
    Richardson extrapolation along the inward normal."""
    w0 = complex(jump.to_chart(0j))
    try:
        z = complex(np.asarray(surface.planar(np.array([w0])))[0])
        if np.isfinite(z):
            return z
    except (ValueError, ArithmeticError):
        pass
    rho = 1e-4
    pts = jump.point(np.array([rho, rho / 2, rho / 4]), np.full(3, math.pi / 2))
    vals = surface.cluster(pts)
    h = vals[:, 0] + 1j * vals[:, 1]
    r1 = 2 * h[1] - h[0]
    r2 = 2 * h[2] - h[1]
    return complex((4 * r2 - r1) / 3)


def _validate_jump(surface: SurfaceMap, jump: BlowUpChart, arc: ArcChart | None,
                   tol: float, radii=(0.02, 0.05, 0.1), eps: float = 1e-9):
    r = np.array(radii)
    right = surface(jump.point(r, np.full(r.shape, eps)))
    left = surface(jump.point(r, np.full(r.shape, math.pi - eps)))
    db = np.max(np.abs(right[:, 2] - jump.b))
    da = np.max(np.abs(left[:, 2] - jump.a))
    if db > tol or da > tol:
        raise ValidationError(
            f"boundary heights near the jump are not constant ({jump.a}, {jump.b}): "
            f"deviation {max(da, db):.3g}")
    if arc is not None:
        if not arc.is_regular():
            raise ValidationError("arc is not regular")
        h = np.concatenate([right[:, 0] + 1j * right[:, 1], left[:, 0] + 1j * left[:, 1]])
        dz = np.max(np.abs(arc.reflect(h) - h))
        if dz > max(tol, 1e-8):
            raise ValidationError(f"projected boundary leaves the arc by {dz:.3g}")
    return right, left


def _local_height(surface: SurfaceMap, jump: BlowUpChart):
    """t in the local coordinate z (Pi = chart point of z), when the surface
    height is a Poisson extension of known boundary data."""
    bd = getattr(surface, "boundary_data", None)
    if bd is None:
        return None
    local = jump.pullback(bd)
    return lambda z: poisson_halfplane(local, z)


def extend_isotropic(surface: SurfaceMap, jump: BlowUpChart, arc: ArcChart,
                     tol: float = 1e-6, validate: bool = True) -> SurfaceMap:
    """Continue ``surface`` across the isotropic line over a height jump.

    The result lives on the blow-up strip p = r + i theta, theta in (0, pi):
    r > 0 is the original surface at Pi(r, theta), r = 0 the isotropic
    segment and r < 0 the image (R_Gamma(h), a + b - t) of Pi(-r, pi - theta).
    """
    if validate:
        _validate_jump(surface, jump, arc, tol)
    z0 = _planar_limit(surface, jump)
    a, b = jump.a, jump.b
    t_local = _local_height(surface, jump)
    local_chart = BlowUpChart(0j, a, b)

    def parts(p):
        p = np.asarray(p, dtype=complex)
        if np.any(~chart_contains("blowup", p)):
            raise ValueError("theta must lie in the open interval (0, pi)")
        r, th = p.real, p.imag
        return p, r, th

    def planar(p):
        p, r, th = parts(p)
        out = np.full(p.shape, z0, dtype=complex)
        pos, neg = r > 0, r < 0
        if np.any(pos):
            out[pos] = surface.planar(jump.point(r[pos], th[pos]))
        if np.any(neg):
            out[neg] = arc.reflect(surface.planar(jump.point(-r[neg], math.pi - th[neg])))
        return out if p.ndim else complex(out)

    def height(p):
        p, r, th = parts(p)
        if t_local is not None:
            return extend_blowup(t_local, local_chart, r, th)
        return extend_blowup(surface.height, jump, r, th)

    def cluster(p):
        p, r, th = parts(p)
        neg = r < 0
        zero = r == 0
        rr = np.where(neg, -r, r)
        tt = np.where(neg, math.pi - th, th)
        res = np.empty(p.shape + (3,))
        live = ~zero
        if np.any(live):
            vals = surface.cluster(jump.point(rr[live], tt[live]))
            z = vals[:, 0] + 1j * vals[:, 1]
            t = vals[:, 2] if t_local is None else t_local(local_chart.point(rr[live], tt[live]))
            nl = neg[live]
            z = np.where(nl, arc.reflect(z), z)
            t = np.where(nl, a + b - t, t)
            res[live] = np.stack([z.real, z.imag, t], axis=-1)
        if np.any(zero):
            res[zero] = np.stack([np.full(int(zero.sum()), z0.real), np.full(int(zero.sum()), z0.imag),
                                  jump.seam_height(th[zero])], axis=-1)
        return res

    ext = SurfaceMap(planar, height, "blowup", provenance="reflected copy", blowup=jump,
                     holomorphic=False, name=f"{surface.name}+isotropic", cluster=cluster)
    ext.motion = MotionI3.from_arc(arc, -1, a + b) if arc.kind != "analytic" else None
    ext.base = surface
    ext.arc = arc
    ext.z0 = z0
    return ext


@dataclass(frozen=True)
class IsotropicSegment:
    """The cluster set {z0} x [tmin, tmax] and the sampling residual."""

    z0: complex
    tmin: float
    tmax: float
    residual: float = 0.0

    @property
    def degenerate(self) -> bool:
        return self.tmin == self.tmax

    def endpoints(self) -> np.ndarray:
        return np.array([[self.z0.real, self.z0.imag, self.tmin],
                         [self.z0.real, self.z0.imag, self.tmax]])

    def to_json(self) -> dict:
        return {"z0": [self.z0.real, self.z0.imag], "tmin": self.tmin, "tmax": self.tmax,
                "residual": self.residual}


def cluster_set(surface: SurfaceMap, jump: BlowUpChart, angles: int = 16,
                rho: float = 1e-7) -> IsotropicSegment:
    """Cluster points of X at the jump, cross-checked along rays into it."""
    z0 = _planar_limit(surface, jump)
    th = (np.arange(angles) + 0.5) * math.pi / angles
    pts = surface(jump.point(np.full(angles, rho), th))
    t_local = _local_height(surface, jump)
    if t_local is not None:
        pts[:, 2] = t_local(rho * np.exp(1j * th))
    h = pts[:, 0] + 1j * pts[:, 1]
    scale = max(1.0, abs(jump.a - jump.b))
    resid = max(float(np.max(np.abs(pts[:, 2] - jump.seam_height(th)))),
                float(np.max(np.abs(h - z0))))
    return IsotropicSegment(z0, min(jump.a, jump.b), max(jump.a, jump.b), resid / scale)


def reflect_parallel_lines(surface: SurfaceMap, jump: BlowUpChart, line_direction: complex,
                           tol: float = 1e-8, height_tol: float = 1e-6) -> SurfaceMap:
    """Extension across an isotropic line joining two parallel horizontal
    segments: 180 degree rotation about the parallel line through the
    midpoint of the isotropic segment."""
    z0 = _planar_limit(surface, jump)
    u = complex(line_direction)
    u /= abs(u)
    right, left = _validate_jump(surface, jump, None, height_tol)
    h = np.concatenate([right[:, 0] + 1j * right[:, 1], left[:, 0] + 1j * left[:, 1]])
    off = np.max(np.abs(np.imag(np.conj(u) * (h - z0))))
    if off > tol:
        raise ValidationError(f"boundary is not straight near the jump (deviation {off:.3g})")
    ext = extend_isotropic(surface, jump, ArcChart.line(z0, u), validate=False)
    ext.motion = MotionI3.rotation_about_line(z0, u, jump.midpoint_height())
    return ext


# -- orbits -----------------------------------------------------------------------------


def period_basis(vectors, tol: float = 1e-9, limit: int = 3) -> list:
    """Greedy basis of up to ``limit`` independent vectors, shortest first."""
    cand = []
    for v in vectors:
        v = np.asarray(v, dtype=float)
        if np.linalg.norm(v) <= tol:
            continue
        nz = np.flatnonzero(np.abs(v) > tol)
        if v[nz[0]] < 0:
            v = -v
        cand.append(v)
    cand.sort(key=lambda v: (_key(np.linalg.norm(v)), tuple(_key(x) for x in v)))
    basis: list = []
    for v in cand:
        trial = np.array(basis + [v])
        if np.linalg.matrix_rank(trial, tol=1e-6 * max(1.0, np.abs(trial).max())) == len(trial):
            basis.append(v)
            if len(basis) == limit:
                break
    return basis


@dataclass
class TilingResult:
    meshes: list
    motions: list
    words: list
    periods: list = field(default_factory=list)
    index: dict = field(default_factory=dict)

    @property
    def period_determinant(self) -> float:
        if len(self.periods) < 3:
            return 0.0
        return float(np.linalg.det(np.array(self.periods[:3])))


def orbit_tiling(seed, generators: Sequence[MotionI3], depth: int,
                 flips: Sequence[bool] | None = None) -> TilingResult:
    """Breadth-first orbit of ``seed`` under the group generated by ``generators``.

    Words up to length ``depth`` in the generators and their inverses are
    expanded as g o s (a neighbour of the copy g(P) across the face fixed by
    s); copies are deduplicated by motion fingerprint.  ``flips[k]`` marks
    generators that reverse the surface orientation; copies reached by an odd
    number of those get their triangles reversed.  Pure translations in the
    orbit are reduced to a basis of at most three period vectors.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    gens = list(generators)
    fl = list(flips) if flips is not None else [False] * len(gens)
    alphabet = [(g, f, k) for k, (g, f) in enumerate(zip(gens, fl))]
    seen = {g.fingerprint() for g in gens}
    for k, (g, f) in enumerate(zip(gens, fl)):
        inv = g.inverse()
        if inv.fingerprint() not in seen:
            alphabet.append((inv, f, -(k + 1)))
            seen.add(inv.fingerprint())
    ident = MotionI3.identity()
    elements = [(ident, False, ())]
    index = {ident.fingerprint(): 0}
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for i in frontier:
            g, parity, word = elements[i]
            for s, f, label in alphabet:
                h = g.compose(s)
                key = h.fingerprint()
                if key in index:
                    continue
                index[key] = len(elements)
                elements.append((h, parity != f, word + (label,)))
                nxt.append(index[key])
        frontier = nxt
    meshes = [seed.transformed(g, flip=parity) for g, parity, _ in elements]
    translations = [g.translation_vector() for g, _, _ in elements]
    periods = period_basis([v for v in translations if v is not None])
    return TilingResult(meshes, [g for g, _, _ in elements], [w for _, _, w in elements],
                        periods, index)
