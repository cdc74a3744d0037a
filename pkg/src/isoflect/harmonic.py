"""Harmonic heights from piecewise-constant boundary data.

Bounded harmonic functions on the upper half-plane H and the unit disk D are
evaluated in closed form as sums of angle terms (no numerical Poisson
integration), together with their harmonic conjugates and the real-analytic
continuation of a height with a jump through the blow-up (r, theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BoundaryData",
    "BlowUpChart",
    "BoundaryPointError",
    "poisson_halfplane",
    "poisson_disk",
    "poisson",
    "conjugate_harmonic",
    "complex_potential",
    "extend_blowup",
    "halfplane_to_disk",
]

TWO_PI = 2.0 * math.pi


class BoundaryPointError(ValueError):
    """Point is not in the open chart domain."""


def _as_float(x) -> float:
    if isinstance(x, str):
        return float(x.replace("infinity", "inf"))
    if x is None:
        raise ValueError("null arc endpoint")
    return float(x)


@dataclass(frozen=True)
class BoundaryData:
    """Piecewise-constant heights on the boundary of H or D.

    ``arcs`` are ``(lo, hi)`` pairs: real intervals (``-inf``/``inf``
    allowed) for the half-plane, angle intervals for the disk.  They must be
    listed in order and tile the boundary.
    """

    chart: str
    arcs: tuple
    values: tuple

    def __post_init__(self):
        arcs = tuple((_as_float(lo), _as_float(hi)) for lo, hi in self.arcs)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "values", values)
        if self.chart not in ("half-plane", "disk"):
            raise ValueError(f"unknown chart {self.chart!r}")
        if len(arcs) != len(values) or not arcs:
            raise ValueError("arcs and values must be non-empty and of equal length")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("boundary values must be finite")
        for (lo, hi) in arcs:
            if not lo < hi:
                raise ValueError(f"empty arc ({lo}, {hi})")
        for (_, hi), (lo, _) in zip(arcs, arcs[1:]):
            if hi != lo:
                raise ValueError(f"arcs do not tile the boundary: gap/overlap at {hi} vs {lo}")
        if self.chart == "half-plane":
            if arcs[0][0] != -math.inf or arcs[-1][1] != math.inf:
                raise ValueError("half-plane arcs must start at -inf and end at inf")
        else:
            span = arcs[-1][1] - arcs[0][0]
            if abs(span - TWO_PI) > 1e-12:
                raise ValueError(f"disk arcs must cover 2*pi, got {span}")

    @classmethod
    def from_jumps(cls, chart: str, jumps: Sequence[float], values: Sequence[float]) -> "BoundaryData":
        """Build from jump points; half-plane needs len(values) == len(jumps) + 1,
        disk arcs run from ``jumps[k]`` to ``jumps[k+1]`` cyclically."""
        jumps = [float(j) for j in jumps]
        if chart == "half-plane":
            edges = [-math.inf, *jumps, math.inf]
            return cls(chart, tuple(zip(edges[:-1], edges[1:])), tuple(values))
        edges = [*jumps, jumps[0] + TWO_PI]
        return cls(chart, tuple(zip(edges[:-1], edges[1:])), tuple(values))

    @property
    def jumps(self) -> tuple:
        """Finite jump points (half-plane) or jump angles (disk)."""
        if self.chart == "half-plane":
            return tuple(hi for (_, hi) in self.arcs[:-1])
        return tuple(lo for (lo, _) in self.arcs)

    @property
    def bounds(self) -> tuple:
        return min(self.values), max(self.values)

    def value_at(self, s: float) -> float:
        """Boundary value at a boundary point (real s, or angle for the disk)."""
        if self.chart == "disk":
            s = self.arcs[0][0] + (s - self.arcs[0][0]) % TWO_PI
        for (lo, hi), v in zip(self.arcs, self.values):
            if lo <= s < hi:
                return v
        return self.values[-1]

    def to_json(self) -> dict:
        def enc(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {"chart": self.chart,
                "arcs": [[enc(lo), enc(hi)] for lo, hi in self.arcs],
                "values": list(self.values)}

    @classmethod
    def from_json(cls, doc: dict) -> "BoundaryData":
        return cls(doc["chart"], tuple(tuple(a) for a in doc["arcs"]), tuple(doc["values"]))


def _interior(bd: BoundaryData, w: np.ndarray):
    if bd.chart == "half-plane":
        bad = ~(w.imag > 0)
    else:
        bad = ~(np.abs(w) < 1)
    if np.any(bad):
        raise BoundaryPointError(f"w={complex(w[bad].ravel()[0])!r} is not inside the {bd.chart}")


def _ccw_angle(a, b):
    """Counterclockwise angle in [0, 2*pi) turning direction a into direction b."""
    ang = np.angle(b * np.conj(a))
    return np.where(ang < 0, ang + TWO_PI, ang)


def poisson_halfplane(bd: BoundaryData, w):
    """Harmonic extension of half-plane boundary data, closed form.

    t(w) = v_last + sum_j (v_{j-1} - v_j)/pi * arg(w - s_j), arg in (0, pi).
    """
    if bd.chart != "half-plane":
        raise ValueError("boundary data is not on the half-plane")
    wa = np.asarray(w, dtype=complex)
    _interior(bd, np.atleast_1d(wa))
    out = np.full(wa.shape, bd.values[-1])
    for j, s in enumerate(bd.jumps):
        out = out + (bd.values[j] - bd.values[j + 1]) / math.pi * np.angle(wa - s)
    return float(out) if np.ndim(w) == 0 else out


def poisson_disk(bd: BoundaryData, w):
    """Harmonic extension of disk boundary data, closed form.

    Each arc (alpha, beta) contributes its harmonic measure
    A(w)/pi - (beta - alpha)/(2 pi), where A is the angle the arc subtends
    at w measured counterclockwise, so the sum has no branch jumps in D.
    """
    if bd.chart != "disk":
        raise ValueError("boundary data is not on the disk")
    wa = np.asarray(w, dtype=complex)
    _interior(bd, np.atleast_1d(wa))
    out = np.zeros(wa.shape)
    if len(bd.arcs) == 1:
        out = out + bd.values[0]
    else:
        for (lo, hi), v in zip(bd.arcs, bd.values):
            A = _ccw_angle(np.exp(1j * lo) - wa, np.exp(1j * hi) - wa)
            out = out + v * (A / math.pi - (hi - lo) / TWO_PI)
    return float(out) if np.ndim(w) == 0 else out


def poisson(bd: BoundaryData, w):
    return poisson_halfplane(bd, w) if bd.chart == "half-plane" else poisson_disk(bd, w)


def complex_potential(bd: BoundaryData, w):
    """Holomorphic t + i t* with t the Poisson extension of ``bd``.

    The conjugate is normalised to vanish at the reference point: i for the
    half-plane, 0 for the disk.
    """
    wa = np.asarray(w, dtype=complex)
    t = poisson(bd, wa)
    if bd.chart == "half-plane":
        tstar = np.zeros(wa.shape)
        for j, s in enumerate(bd.jumps):
            c = (bd.values[j] - bd.values[j + 1]) / math.pi
            tstar = tstar - c * (np.log(np.abs(wa - s)) - math.log(abs(1j - s)))
    else:
        tstar = np.zeros(wa.shape)
        if len(bd.arcs) > 1:
            for (lo, hi), v in zip(bd.arcs, bd.values):
                tstar = tstar - v / math.pi * np.log(np.abs((np.exp(1j * hi) - wa) / (np.exp(1j * lo) - wa)))
    out = t + 1j * tstar
    return complex(out) if np.ndim(w) == 0 else out


def conjugate_harmonic(bd: BoundaryData, w):
    """Harmonic conjugate t* of the Poisson extension (t + i t* holomorphic).

    Diverges logarithmically at jump points, which lie on the boundary, so
    only interior points are accepted.
    """
    out = np.imag(complex_potential(bd, w))
    return float(out) if np.ndim(w) == 0 else out


def halfplane_to_disk(z, w0: complex):
    """Moebius map H -> D sending 0 to the boundary point ``w0`` (|w0| = 1)."""
    z = np.asarray(z, dtype=complex)
    return w0 * (1 + 1j * z) / (1 - 1j * z)


@dataclass(frozen=True)
class BlowUpChart:
    """Blow-up of a jump point ``jump`` on the chart boundary.

    Strip coordinates (r, theta) in R x (0, pi) map to the chart by
    Pi(r, theta) = jump + r e^{i theta} (half-plane) or through the Moebius
    map H -> D centred at ``jump`` (disk).  ``a`` is the boundary height on
    the clockwise side (left of the jump on the real line) and ``b`` on the
    counterclockwise side.
    """

    jump: complex
    a: float
    b: float
    chart: str = "half-plane"

    def __post_init__(self):
        object.__setattr__(self, "jump", complex(self.jump))
        if self.chart == "half-plane" and self.jump.imag != 0:
            raise ValueError("half-plane jump point must be real")
        if self.chart == "disk" and abs(abs(self.jump) - 1) > 1e-12:
            raise ValueError("disk jump point must lie on the unit circle")

    def local(self, r, theta):
        """The local half-plane coordinate r e^{i theta} (before charting)."""
        return np.asarray(r, dtype=float) * np.exp(1j * np.asarray(theta, dtype=float))

    def to_chart(self, z):
        """Map local half-plane coordinates z to the chart."""
        z = np.asarray(z, dtype=complex)
        if self.chart == "half-plane":
            return self.jump + z
        return halfplane_to_disk(z, self.jump)

    def point(self, r, theta):
        """Pi(r, theta) in chart coordinates (r > 0 lands inside the chart)."""
        return self.to_chart(self.local(r, theta))

    def pullback(self, bd: BoundaryData) -> BoundaryData:
        """Boundary data in the local half-plane coordinate z, jump at z = 0.

        Heights evaluated from the pulled-back data avoid forming the
        difference of nearly equal chart points close to the jump.
        """
        if bd.chart != self.chart:
            raise ValueError("boundary data and blow-up chart disagree")
        if self.chart == "half-plane":
            jumps = [s - self.jump.real for s in bd.jumps]
            return BoundaryData.from_jumps("half-plane", jumps, bd.values)
        phi0 = math.atan2(self.jump.imag, self.jump.real)
        local = []
        for phi in bd.jumps:
            d = (phi - phi0) % TWO_PI
            if abs(d) < 1e-14 or abs(d - TWO_PI) < 1e-14:
                local.append(0.0)
            elif abs(d - math.pi) > 1e-14:
                local.append(math.tan(0.5 * d))
        local.sort()
        if not local:
            return BoundaryData("half-plane", ((-math.inf, math.inf),), (bd.values[0],))
        probes = [local[0] - 1.0] + [0.5 * (p + q) for p, q in zip(local, local[1:])] + [local[-1] + 1.0]
        values = [bd.value_at(phi0 + 2.0 * math.atan(s)) for s in probes]
        return BoundaryData.from_jumps("half-plane", local, values)

    def midpoint_height(self) -> float:
        return 0.5 * (self.a + self.b)

    def seam_height(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.a * theta / math.pi + self.b * (1.0 - theta / math.pi)


def _check_theta(theta):
    th = np.asarray(theta, dtype=float)
    if np.any(~((th > 0) & (th < math.pi))):
        raise ValueError("theta must lie in the open interval (0, pi)")
    return th


def extend_blowup(t: Callable, chart: BlowUpChart, r, theta):
    """Continue the height ``t`` (a chart evaluator) to the full blow-up strip.

    r > 0: t(Pi(r, theta)); r = 0: the seam interpolation between ``a`` and
    ``b``; r < 0: a + b - t(Pi(-r, pi - theta)).
    """
    th = _check_theta(theta)
    r = np.asarray(r, dtype=float)
    r, th = np.broadcast_arrays(r, th)
    out = np.empty(r.shape)
    pos, neg, zero = r > 0, r < 0, r == 0
    if np.any(pos):
        out[pos] = t(chart.point(r[pos], th[pos]))
    if np.any(neg):
        out[neg] = chart.a + chart.b - np.asarray(t(chart.point(-r[neg], math.pi - th[neg])))
    if np.any(zero):
        out[zero] = chart.seam_height(th[zero])
    return float(out) if out.ndim == 0 else out
