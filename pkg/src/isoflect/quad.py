"""Adaptive contour integration of analytic integrands in the complex plane.

The engine is a vectorised Gauss-Kronrod (G7/K15) scheme: all live panels of
all pieces of a path are evaluated in one batched integrand call, panels whose
|K15 - G7| estimate meets their share of the tolerance are retired, the rest
are bisected.  Paths are chains of straight segments and circular arcs.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import ComplexExpr, evaluate, to_string

__all__ = [
    "Segment",
    "Arc",
    "PathInC",
    "QuadratureError",
    "SingularityError",
    "integrate_along",
    "integrate_many",
    "detour_path",
    "integrate_from_basepoint",
    "Antiderivative",
    "DEFAULT_TOL",
    "PANEL_BUDGET",
    "EXCLUSION_RADIUS",
]

DEFAULT_TOL = 1e-10
PANEL_BUDGET = 2**14
EXCLUSION_RADIUS = 1e-3

# QUADPACK qk15 nodes/weights on [-1, 1]; Gauss points are the odd entries.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
_gauss_idx = [1, 3, 5, 7, 9, 11, 13]
GAUSS_WEIGHTS[_gauss_idx] = np.concatenate([_WG[:-1], _WG[::-1]])


class QuadratureError(RuntimeError):
    pass


class SingularityError(ValueError):
    def __init__(self, message: str, singularity: complex):
        self.singularity = singularity
        super().__init__(message)


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, t):
        return self.start + (self.end - self.start) * t

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def distance_to(self, z: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(z - self.start)
        s = ((z - self.start) * d.conjugate()).real / abs(d) ** 2
        s = min(1.0, max(0.0, s))
        return abs(z - self.point(s))


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i*phi)``, phi from ``phi0`` to ``phi1``."""

    center: complex
    radius: float
    phi0: float
    phi1: float

    @property
    def start(self) -> complex:
        return self.center + self.radius * complex(math.cos(self.phi0), math.sin(self.phi0))

    @property
    def end(self) -> complex:
        return self.center + self.radius * complex(math.cos(self.phi1), math.sin(self.phi1))

    def point(self, t):
        phi = self.phi0 + (self.phi1 - self.phi0) * t
        return self.center + self.radius * np.exp(1j * phi)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.phi1, self.phi0)

    def distance_to(self, z: complex) -> float:
        # sampled bound is enough for exclusion checks
        pts = self.point(np.linspace(0.0, 1.0, 65))
        return float(np.min(np.abs(pts - z)))


@dataclass(frozen=True)
class PathInC:
    pieces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @property
    def start(self) -> complex:
        return self.pieces[0].start

    @property
    def end(self) -> complex:
        return self.pieces[-1].end

    def is_continuous(self, tol: float = 1e-12) -> bool:
        return all(abs(a.end - b.start) <= tol * max(1.0, abs(a.end))
                   for a, b in zip(self.pieces, self.pieces[1:]))

    def reversed(self) -> "PathInC":
        return PathInC(tuple(p.reversed() for p in reversed(self.pieces)))

    def min_distance(self, z: complex) -> float:
        return min(p.distance_to(z) for p in self.pieces)

    @classmethod
    def segment(cls, a: complex, b: complex) -> "PathInC":
        return cls((Segment(complex(a), complex(b)),))

    @classmethod
    def circle(cls, center: complex, radius: float) -> "PathInC":
        return cls((Arc(complex(center), float(radius), 0.0, 2 * math.pi),))


def _as_integrand(f) -> Callable:
    """Return a vectorised callable mapping complex arrays to shape (k, m)."""
    if isinstance(f, ComplexExpr):
        return lambda z: evaluate(f, z)[None, :]
    if isinstance(f, (list, tuple)) and f and all(isinstance(g, ComplexExpr) for g in f):
        exprs = tuple(f)
        return lambda z: np.stack([evaluate(g, z) for g in exprs])
    if callable(f):
        def call(z):
            out = np.asarray(f(z), dtype=complex)
            return out[None, :] if out.ndim == 1 else out
        return call
    raise TypeError(f"cannot integrate {type(f).__name__}")


def _piece_arrays(pieces):
    kind = np.array([isinstance(p, Arc) for p in pieces])
    a = np.array([p.start if isinstance(p, Segment) else p.center for p in pieces], dtype=complex)
    b = np.array([p.end if isinstance(p, Segment) else 0.0 for p in pieces], dtype=complex)
    rad = np.array([p.radius if isinstance(p, Arc) else 0.0 for p in pieces])
    p0 = np.array([p.phi0 if isinstance(p, Arc) else 0.0 for p in pieces])
    p1 = np.array([p.phi1 if isinstance(p, Arc) else 0.0 for p in pieces])
    return kind, a, b, rad, p0, p1


def _adaptive(fn, pieces, tol, budget=PANEL_BUDGET):
    """Integrate ``fn`` along each piece; returns (values (k, P), errors (P,))."""
    kind, a, b, rad, p0, p1 = _piece_arrays(pieces)
    npieces = len(pieces)
    # per-piece tolerance share, proportional to parameter length of the panel
    owner = np.arange(npieces)
    lo = np.zeros(npieces)
    hi = np.ones(npieces)
    totals = None
    errors = np.zeros(npieces)
    used = npieces
    while owner.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
        o = owner[:, None]
        arc = kind[o]
        phi = p0[o] + (p1[o] - p0[o]) * t
        eiphi = np.exp(1j * phi)
        z = np.where(arc, a[o] + rad[o] * eiphi, a[o] + (b[o] - a[o]) * t)
        dz = np.where(arc, 1j * rad[o] * (p1[o] - p0[o]) * eiphi, (b[o] - a[o]) * np.ones_like(t))
        vals = fn(z.ravel())
        k = vals.shape[0]
        vals = vals.reshape(k, *z.shape) * dz[None]
        kron = np.einsum("kpn,n->kp", vals, KRONROD_WEIGHTS) * half[None, :]
        gauss = np.einsum("kpn,n->kp", vals, GAUSS_WEIGHTS) * half[None, :]
        if totals is None:
            totals = np.zeros((k, npieces), dtype=complex)
        if not np.all(np.isfinite(kron)):
            bad = ~np.all(np.isfinite(kron), axis=0)
            zbad = z[bad].ravel()[0]
            raise QuadratureError(f"integrand not finite near z={zbad!r}")
        err = np.max(np.abs(kron - gauss), axis=0)
        ok = err <= tol * (hi - lo)
        # panels that have shrunk to rounding level are accepted as they are
        ok |= (hi - lo) < 1e-13
        # as are panels whose estimate is below the rounding of |f| dz (QUADPACK floor)
        mass = np.max(np.einsum("kpn,n->kp", np.abs(vals), KRONROD_WEIGHTS), axis=0) * half
        ok |= err <= 50 * np.finfo(float).eps * mass
        np.add.at(totals.T, owner[ok], kron[:, ok].T)
        np.add.at(errors, owner[ok], err[ok])
        keep = ~ok
        if not np.any(keep):
            break
        used += int(np.count_nonzero(keep))
        if used > budget:
            raise QuadratureError(
                f"tolerance {tol:g} not reached within {budget} panels")
        owner = np.repeat(owner[keep], 2)
        l, m, h = lo[keep], mid[keep], hi[keep]
        lo = np.column_stack([l, m]).ravel()
        hi = np.column_stack([m, h]).ravel()
    return totals, errors


def integrate_along(f, path: PathInC, tol: float = DEFAULT_TOL):
    """Integrate ``f`` along ``path``.

    ``f`` is a :class:`ComplexExpr`, a sequence of them (vector integrand), or
    a vectorised callable.  Returns a complex scalar for scalar integrands and
    a complex array otherwise.
    """
    fn = _as_integrand(f)
    share = tol / len(path.pieces)
    totals, _ = _adaptive(fn, path.pieces, share)
    out = totals.sum(axis=1)
    if isinstance(f, ComplexExpr):
        return complex(out[0])
    return out


def integrate_many(f, starts, ends, tol: float = DEFAULT_TOL):
    """Integrate along many straight segments at once; returns shape (k, m)."""
    fn = _as_integrand(f)
    pieces = [Segment(complex(s), complex(e)) for s, e in zip(np.ravel(starts), np.ravel(ends))]
    if not pieces:
        return np.zeros((1, 0), dtype=complex)
    totals, _ = _adaptive(fn, pieces, tol)
    return totals


def detour_path(w0: complex, w: complex, singularities: Sequence[complex] = (),
                radius: float = EXCLUSION_RADIUS, side: int = 0) -> PathInC:
    """Straight path ``w0 -> w`` with semicircular detours around singularities.

    ``side`` picks the detour side: 0 = away from the singularity (the
    shorter way round), +1 = left of the direction of travel, -1 = right.
    """
    w0, w = complex(w0), complex(w)
    d = w - w0
    length = abs(d)
    if length == 0:
        return PathInC((Segment(w0, w),))
    u = d / length
    hits = []
    for s in singularities:
        s = complex(s)
        if abs(s - w0) <= radius or abs(s - w) <= radius:
            raise SingularityError(f"endpoint within {radius:g} of singularity {s!r}", s)
        rel = (s - w0) / u
        along, off = rel.real, rel.imag
        if abs(off) < radius and radius < along < length - radius:
            hits.append((along, off, s))
    if not hits:
        return PathInC((Segment(w0, w),))
    hits.sort()
    for (a1, _, s1), (a2, _, s2) in zip(hits, hits[1:]):
        if a2 - a1 < 2 * radius:
            raise SingularityError("singularities closer than two exclusion radii", s2)
    pieces = []
    cur = w0
    for along, off, s in hits:
        half = math.sqrt(radius**2 - off**2)
        enter = w0 + u * (along - half)
        leave = w0 + u * (along + half)
        pieces.append(Segment(cur, enter))
        if side == 0:
            go_left = off <= 0
        else:
            go_left = side > 0
        a_in = math.atan2((enter - s).imag, (enter - s).real)
        a_out = math.atan2((leave - s).imag, (leave - s).real)
        # left of travel direction = counterclockwise when seen from s? decide by sweep
        sweep = (a_out - a_in) % (2 * math.pi)
        ccw = (a_in, a_in + sweep)
        cw = (a_in, a_in + sweep - 2 * math.pi)
        mid_ccw = s + radius * np.exp(1j * (a_in + 0.5 * sweep))
        left_of_ccw = ((mid_ccw - s) / u).imag > 0
        phi0, phi1 = ccw if left_of_ccw == go_left else cw
        pieces.append(Arc(s, radius, phi0, phi1))
        cur = leave
    pieces.append(Segment(cur, w))
    return PathInC(tuple(pieces))


def integrate_from_basepoint(f, w0: complex, w: complex, singularities: Sequence[complex] = (),
                             tol: float = DEFAULT_TOL, radius: float = EXCLUSION_RADIUS):
    """Integral of ``f`` from ``w0`` to ``w`` along a detoured straight path."""
    return integrate_along(f, detour_path(w0, w, singularities, radius), tol)


class Antiderivative:
    """Memoised antiderivative ``w -> value0 + int_{w0}^{w} f``.

    Points integrated directly from the base point become anchors; later
    queries within ``reach`` of an anchor integrate only the short hop from
    it, so grid evaluation costs O(grid) panels.  Results are reproducible for
    a fixed query order.  ``interior`` lists the singularities to keep clear
    of (detoured around), including poles on the chart boundary, which a
    straight path may otherwise graze.
    """

    def __init__(self, f, w0: complex, value0=0.0, interior: Sequence[complex] = (),
                 tol: float = DEFAULT_TOL, radius: float = EXCLUSION_RADIUS,
                 reach: float = 0.25):
        self.fn = _as_integrand(f)
        self.key = (to_string(f) if isinstance(f, ComplexExpr)
                    else tuple(to_string(g) for g in f) if isinstance(f, (list, tuple)) else id(f))
        self.w0 = complex(w0)
        self.value0 = np.atleast_1d(np.asarray(value0, dtype=complex))
        self.interior = tuple(complex(s) for s in interior)
        self.tol = tol
        self.radius = radius
        self.reach = reach
        self._cells: dict = {}
        self._lock = threading.Lock()

    def _cell(self, w: complex):
        return (math.floor(w.real / self.reach), math.floor(w.imag / self.reach))

    def _nearest_anchor(self, w: complex):
        cx, cy = self._cell(w)
        best, best_d = None, self.reach
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for a, val in self._cells.get((cx + dx, cy + dy), ()):
                    d = abs(a - w)
                    if d < best_d or (d == best_d and best is not None and (a.real, a.imag) < (best[0].real, best[0].imag)):
                        best, best_d = (a, val), d
        return best

    def _clear(self, a: complex, w: complex) -> bool:
        seg = Segment(a, w)
        return all(seg.distance_to(s) > self.radius for s in self.interior)

    def _direct_pieces(self, w: complex) -> tuple:
        """Detoured path from the base point; a point inside the exclusion
        disk of a singularity is reached radially from twice the radius."""
        tail = ()
        for s in self.interior:
            gap = abs(w - s)
            if 0 < gap <= 2 * self.radius:
                # graded radii (ratio 4) keep each piece away from its own endpoint singularity
                u = (w - s) / gap
                radii = [2 * self.radius]
                while radii[-1] > 4 * gap:
                    radii.append(radii[-1] / 4)
                pts = [s + rad * u for rad in radii] + [w]
                tail = tuple(Segment(a, b) for a, b in zip(pts, pts[1:]))
                w = pts[0]
                break
        return detour_path(self.w0, w, self.interior, self.radius).pieces + tail

    def __call__(self, w):
        """Value(s) at ``w``; shape (k,) for scalar ``w`` else (k, m)."""
        scalar = np.ndim(w) == 0
        ws = np.atleast_1d(np.asarray(w, dtype=complex)).ravel()
        out = np.empty((self.value0.size, ws.size), dtype=complex)
        starts, ends, bases, slots = [], [], [], []
        for j, wj in enumerate(ws):
            wj = complex(wj)
            if wj == self.w0:
                out[:, j] = self.value0
                continue
            with self._lock:
                hit = self._nearest_anchor(wj)
            if hit is not None and self._clear(hit[0], wj):
                starts.append(hit[0])
                ends.append(wj)
                bases.append(hit[1])
                slots.append(j)
                continue
            pieces = self._direct_pieces(wj)
            totals, _ = _adaptive(self.fn, pieces, self.tol / len(pieces))
            val = self.value0 + totals.sum(axis=1)
            out[:, j] = val
            with self._lock:
                self._cells.setdefault(self._cell(wj), []).append((wj, val))
        if starts:
            hops = integrate_many(self.fn, starts, ends, self.tol)
            out[:, slots] = np.array(bases).T + hops
        return out[:, 0] if scalar else out

    def cluster(self, ws):
        """Values at a tight cluster of points, all hopped from ``ws[0]``.

        Differences between cluster values then carry only the error of the
        short hops, which is what finite-difference stencils need.
        """
        ws = np.atleast_1d(np.asarray(ws, dtype=complex)).ravel()
        base = self(ws[0])
        out = np.empty((self.value0.size, ws.size), dtype=complex)
        out[:, 0] = base
        if ws.size > 1:
            hops = integrate_many(self.fn, np.full(ws.size - 1, ws[0]), ws[1:], self.tol)
            out[:, 1:] = base[:, None] + hops
        return out

    def anchors(self) -> int:
        return sum(len(v) for v in self._cells.values())
