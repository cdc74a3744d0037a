"""Invariant suites: harmonicity, conformality, reflection involution,
Poisson recovery, Schwarz-Christoffel symmetry and the c = +-1 endpoint
equations.  Each suite returns a :class:`SuiteResult`; the CLI ``verify``
command runs a selection and reports them as JSON."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .harmonic import BoundaryData, poisson
from .mesh import cauchy_riemann_residual, laplacian_residual
from .quad import PathInC, integrate_along
from .reflect import ArcChart
from .scpoly import PolygonChart, polygon_height, sc_map
from .weierstrass import SurfaceMap, WeierstrassData, surface

__all__ = [
    "SuiteResult",
    "harmonicity",
    "conformality",
    "reflection_involution",
    "poisson_recovery",
    "sc_symmetry",
    "data_checks",
    "graph_pde_residual",
    "endpoint_equation",
    "endpoint_samples",
    "one_sided_limit",
    "seam_gap",
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    residual: float
    threshold: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": bool(self.passed), "residual": float(self.residual),
                "threshold": float(self.threshold), "details": self.details}


def _result(name, residual, threshold, **details) -> SuiteResult:
    residual = float(residual)
    return SuiteResult(name, bool(np.isfinite(residual) and residual <= threshold), residual,
                       threshold, details)


def bbox_diagonal(surf: SurfaceMap, params) -> float:
    pts = surf(params)
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def harmonicity(surf: SurfaceMap, params, rel_tol: float = 1e-5) -> SuiteResult:
    """Scaled finite-difference Laplacian <= rel_tol * bbox diagonal."""
    diag = max(bbox_diagonal(surf, params), 1e-300)
    res = laplacian_residual(surf, params)
    return _result("harmonicity", res.max(), rel_tol * diag, samples=int(res.size), bbox_diagonal=diag)


def conformality(surf: SurfaceMap, params, tol: float = 1e-6) -> SuiteResult:
    """Cauchy-Riemann residual of h = x + i y."""
    res = cauchy_riemann_residual(surf, params)
    return _result("conformality", res.max(), tol, samples=int(res.size))


def reflection_involution(arcs=None, samples: int = 50, tol: float = 1e-10, seed: int = 0) -> SuiteResult:
    """R o R = id near each arc and R fixes sampled arc points."""
    if arcs is None:
        arcs = [ArcChart.line(0.5 + 0.25j, 1 + 2j), ArcChart.circle(0.3 - 0.2j, 1.5),
                ArcChart.analytic("w + i*w^2", (-0.5, 0.5))]
    rng = np.random.default_rng(seed)
    worst = 0.0
    per = {}
    for arc in arcs:
        lo, hi = (arc.interval if arc.kind == "analytic" else (-2.0, 2.0) if arc.kind == "line"
                  else (0.0, 2 * math.pi))
        s = np.linspace(lo, hi, samples + 2)[1:-1]
        on = arc.param(s + 0j)
        fix = np.max(np.abs(arc.reflect(on) - on))
        n = 1j * arc.derivative(s + 0j)
        n = n / np.abs(n)
        z = on + 0.05 * rng.uniform(-1, 1, s.size) * n
        inv = np.max(np.abs(arc.reflect(arc.reflect(z)) - z))
        per[arc.kind] = {"fixed": float(fix), "involution": float(inv)}
        worst = max(worst, fix, inv)
    return _result("reflection-involution", worst, tol, arcs=per)


def _poisson_quadrature(bd: BoundaryData, w: complex, tol: float = 1e-13) -> float:
    """Direct Poisson integral by adaptive quadrature on each arc."""
    total = 0.0
    if bd.chart == "half-plane":
        x, y = w.real, w.imag
        for (lo, hi), v in zip(bd.arcs, bd.values):
            # substitute s = x + y tan(u): the kernel becomes du / pi
            ulo = -math.pi / 2 if not math.isfinite(lo) else math.atan((lo - x) / y)
            uhi = math.pi / 2 if not math.isfinite(hi) else math.atan((hi - x) / y)
            total += v * (uhi - ulo) / math.pi
        return total
    for (lo, hi), v in zip(bd.arcs, bd.values):
        kern = lambda z: (1 - abs(w) ** 2) / np.abs(np.exp(1j * z.real) - w) ** 2 + 0j  # noqa: E731
        val = integrate_along(kern, PathInC.segment(lo, hi), tol)
        total += v * float(val[0].real) / (2 * math.pi)
    return total


def poisson_recovery(bd: BoundaryData, samples: int = 32, dist: float = 1e-6, tol: float = 1e-9,
                     seed: int = 0) -> SuiteResult:
    """Closed form vs direct quadrature, max principle and boundary recovery.

    At distance ``dist`` from a boundary point a gap ``g`` away from the
    nearest jump the error is at most sum|jump| * dist / (pi g) to first
    order; the recovery ratio err / that bound must stay below 1 (up to rounding).
    """
    rng = np.random.default_rng(seed)
    lo_v, hi_v = bd.bounds
    total_jump = sum(abs(b - a) for a, b in zip(bd.values, bd.values[1:]))
    if bd.chart == "disk":
        total_jump += abs(bd.values[0] - bd.values[-1])
    jumps = np.array(bd.jumps, dtype=float)
    if bd.chart == "half-plane":
        span = (jumps.min() - 2, jumps.max() + 2) if jumps.size else (-2.0, 2.0)
        s = rng.uniform(*span, samples)
        gap = np.abs(s[:, None] - jumps[None, :]).min(axis=1) if jumps.size else np.full(s.size, np.inf)
        pts = s + 1j * dist
        inner = rng.uniform(*span, samples) + 1j * rng.uniform(0.05, 3, samples)
    else:
        s = rng.uniform(0, 2 * math.pi, samples)
        gap = 2 * np.sin(0.5 * np.abs(np.angle(np.exp(1j * (s[:, None] - jumps[None, :]))))).min(axis=1)
        pts = (1 - dist) * np.exp(1j * s)
        inner = np.sqrt(rng.uniform(0, 0.9, samples)) * np.exp(1j * rng.uniform(0, 2 * math.pi, samples))
    keep = gap > 10 * dist
    err = np.abs(poisson(bd, pts[keep]) - np.array([bd.value_at(x) for x in s[keep]]))
    bound = total_jump * dist / (np.pi * gap[keep])
    ratio = float(np.max(err / np.maximum(bound, 1e-300))) if err.size and total_jump else 0.0
    closed = poisson(bd, inner)
    quad = np.array([_poisson_quadrature(bd, complex(w)) for w in inner])
    worst_quad = float(np.max(np.abs(closed - quad)))
    maxp = float(max(0.0, np.max(closed) - hi_v, lo_v - np.min(closed)))
    passed = worst_quad <= tol and maxp == 0.0 and ratio <= 1.0 + 1e-6
    return SuiteResult("poisson-recovery", passed, worst_quad, tol,
                       {"quadrature": worst_quad, "max_principle_excess": maxp,
                        "boundary_recovery_ratio": ratio, "samples": int(inner.size)})


def sc_symmetry(n: int, samples: int = 100, tol: float = 1e-8, seed: int = 0) -> SuiteResult:
    """Rotation and conjugation symmetry of f, regular polygon, midpoints."""
    rng = np.random.default_rng(seed)
    w = np.sqrt(rng.uniform(0, 1, samples)) * np.exp(1j * rng.uniform(0, 2 * math.pi, samples))
    rot = np.exp(1j * math.pi / n)
    f = sc_map(n, w)
    r_rot = float(np.max(np.abs(sc_map(n, rot * w) - rot * f)))
    r_conj = float(np.max(np.abs(sc_map(n, np.conj(w)) - np.conj(f))))
    chart = PolygonChart(n)
    lengths = chart.edge_lengths()
    spread = float(np.ptp(lengths))
    angle_spread = float(np.ptp(chart.vertex_angles()))
    v = chart.vertices
    mids = float(np.max(np.abs(chart.midpoints - 0.5 * (v + np.roll(v, 1)))))
    sampled_vertices = sc_map(n, chart.vertex_preimages * (1 - 1e-12))
    vertex_gap = float(np.max(np.abs(sampled_vertices - v)))
    inner = polygon_height(n, 0.999 * w)
    maxp = float(max(0.0, -np.min(inner), np.max(inner) - 1.0))
    res = max(r_rot, r_conj, spread, angle_spread, mids, maxp)
    return _result("sc-symmetry", res, tol, n=n, rotation=r_rot, conjugation=r_conj,
                   edge_spread=spread, angle_spread=angle_spread, midpoint=mids,
                   vertex_approach=vertex_gap, radius=chart.radius)


def one_sided_limit(surf: SurfaceMap, base, direction, eps: float = 1e-4) -> np.ndarray:
    """lim X(base + s * direction) as s -> 0+, by quadratic extrapolation
    from s = e, 2 e, 3 e with e = eps * min(1, feature distance); the error
    is O((eps)^3) relative to the local feature scale."""
    base = np.atleast_1d(np.asarray(base, dtype=complex))
    direction = np.broadcast_to(np.asarray(direction, dtype=complex), base.shape)
    scale = np.minimum(1.0, np.asarray(surf.feature_distance(base), dtype=float))
    out = np.empty(base.shape + (3,))
    for k, (b, d) in enumerate(zip(base, direction)):
        v = surf.cluster(b + eps * scale[k] * d * np.array([1.0, 2.0, 3.0]))
        out[k] = 3 * v[0] - 3 * v[1] + v[2]
    return out


def seam_gap(surf: SurfaceMap, seam_points, normal, eps: float = 1e-4) -> float:
    """Largest jump of X across a parameter seam (difference of the two
    one-sided limits)."""
    lo = one_sided_limit(surf, seam_points, -np.asarray(normal), eps)
    hi = one_sided_limit(surf, seam_points, np.asarray(normal), eps)
    return float(np.max(np.abs(hi - lo)))


def data_checks(data: WeierstrassData) -> SuiteResult:
    problems = data.check()
    return SuiteResult("data", not problems, float(len(problems)), 0.0, {"problems": problems})


# -- c = +-1 endpoints ------------------------------------------------------------------


def _jacobian(data: WeierstrassData, w: complex) -> np.ndarray:
    phi = [complex(ex.evaluate(e, w)) for e in data.integrands()]
    sign = data.planar_sign
    return sign * np.array([[phi[0].real, -phi[0].imag], [phi[1].real, -phi[1].imag]])


def _invert_planar(data: WeierstrassData, surf: SurfaceMap, wc: complex, targets) -> np.ndarray:
    """Parameters w with planar(w) = target (Newton, hopping from ``wc``)."""
    out = []
    for target in targets:
        w = wc
        for _ in range(50):
            p = surf.cluster(np.array([wc, w]))[1]
            r = np.array([p[0] - target.real, p[1] - target.imag])
            step = np.linalg.solve(_jacobian(data, w), r)
            w = w - complex(step[0], step[1])
            if math.hypot(*step) < 1e-15 * max(1.0, abs(w)):
                break
        out.append(w)
    return np.array(out)


def graph_pde_residual(data: WeierstrassData, wc: complex, step: float = 1e-3) -> float:
    """Residual of the graph equation of X_c around X_c(wc).

    c = 1: (1 + f_y^2) f_xx - 2 f_x f_y f_xy + (1 + f_x^2) f_yy (Euclidean minimal);
    c = -1: (1 - f_y^2) f_xx + 2 f_x f_y f_xy + (1 - f_x^2) f_yy (Lorentzian maximal).
    """
    surf = surface(data)
    p0 = surf.cluster(np.array([wc]))[0]
    x0, y0 = p0[0], p0[1]
    offs = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    targets = [complex(x0 + i * step, y0 + j * step) for i, j in offs]
    ws = _invert_planar(data, surf, wc, targets)
    t = surf.cluster(np.concatenate([[wc], ws]))[1:, 2]
    F = {o: v for o, v in zip(offs, t)}
    h = step
    fx = (F[1, 0] - F[-1, 0]) / (2 * h)
    fy = (F[0, 1] - F[0, -1]) / (2 * h)
    fxx = (F[1, 0] - 2 * F[0, 0] + F[-1, 0]) / h ** 2
    fyy = (F[0, 1] - 2 * F[0, 0] + F[0, -1]) / h ** 2
    fxy = (F[1, 1] - F[1, -1] - F[-1, 1] + F[-1, -1]) / (4 * h ** 2)
    if data.c > 0:
        return float(abs((1 + fy ** 2) * fxx - 2 * fx * fy * fxy + (1 + fx ** 2) * fyy))
    if data.c < 0:
        if fx ** 2 + fy ** 2 >= 1:
            raise ValueError("graph is not spacelike at this sample")
        return float(abs((1 - fy ** 2) * fxx + 2 * fx * fy * fxy + (1 - fx ** 2) * fyy))
    return float(abs(fxx + fyy))


def endpoint_samples(count: int = 12, seed: int = 0) -> np.ndarray:
    """Upper half-plane samples away from the unit circle, where the
    catenoid-family planar map folds (|G| = 1)."""
    rng = np.random.default_rng(seed)
    r = np.where(rng.uniform(size=count) < 0.5, rng.uniform(0.3, 0.6, count), rng.uniform(1.8, 3.0, count))
    return r * np.exp(1j * rng.uniform(0.4, math.pi - 0.4, count))


def endpoint_equation(data: WeierstrassData, params, tol: float = 1e-4) -> SuiteResult:
    res = [graph_pde_residual(data, complex(w)) for w in np.ravel(params)]
    label = {1.0: "euclidean-minimal", -1.0: "lorentzian-maximal"}.get(data.c, "graph-laplace")
    return _result(f"endpoint-{label}", max(res), tol, samples=len(res))
