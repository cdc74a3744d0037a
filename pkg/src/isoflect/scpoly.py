"""Regular 2n-gon patch: Schwarz-Christoffel map, polygon height, tiling.

The map f(w) = int_0^w (1 - z^{2n})^{-1/n} dz sends the unit disk onto a
regular 2n-gon with vertices f(e^{k pi i / n}).  Heights alternate 1 and 0 on
the boundary arcs I_k between consecutive edge-midpoint preimages
w_k = e^{i (k pi / n - pi / (2n))}, so X = (f, t) is a zero mean curvature
patch bounded by 2n horizontal polygonal arcs and 2n isotropic segments.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .harmonic import BlowUpChart, BoundaryData
from .mesh import BOUNDARY, SEAM, Mesh
from .reflect import MotionI3, TilingResult, orbit_tiling
from .weierstrass import SurfaceMap

__all__ = [
    "PolygonChart",
    "sc_map",
    "polygon_height",
    "schwarz_patch",
    "schwarz_patch_mesh",
    "schwarz_d_generators",
    "schwarz_d_tiling",
    "seam_residual",
    "MAX_N",
]

MAX_N = 32
SC_TOL = 1e-14


def _check_n(n: int):
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ValueError("n must be an integer >= 2")
    if n > MAX_N:
        raise ValueError(f"n must be <= {MAX_N}")


def sc_map(n: int, w, tol: float = SC_TOL):
    """f(w) along the radial path from 0 (|w| <= 1)."""
    _check_n(n)
    wa = np.asarray(w, dtype=complex)
    if np.any(np.abs(wa) > 1 + 1e-12):
        raise ValueError("sc_map needs |w| <= 1")
    out = kernels.sc_map_many(int(n), wa, tol)
    return complex(out) if wa.ndim == 0 else out


def polygon_height(n: int, w):
    """Poisson extension of the alternating 1/0 data on the arcs I_k."""
    _check_n(n)
    wa = np.asarray(w, dtype=complex)
    if np.any(~(np.abs(wa) < 1)):
        raise ValueError("polygon_height needs |w| < 1")
    out = kernels.polygon_height_many(int(n), wa)
    return float(out) if wa.ndim == 0 else out


@dataclass(frozen=True)
class PolygonChart:
    """Preimages and images of the vertices and edge midpoints (k = 1..2n)."""

    n: int

    def __post_init__(self):
        _check_n(self.n)

    @functools.cached_property
    def vertex_preimages(self) -> np.ndarray:
        k = np.arange(1, 2 * self.n + 1)
        return np.exp(1j * k * np.pi / self.n)

    @functools.cached_property
    def midpoint_angles(self) -> np.ndarray:
        k = np.arange(1, 2 * self.n + 1)
        return k * np.pi / self.n - np.pi / (2 * self.n)

    @functools.cached_property
    def midpoint_preimages(self) -> np.ndarray:
        return np.exp(1j * self.midpoint_angles)

    @functools.cached_property
    def radius(self) -> float:
        """Circumradius f(1)."""
        return float(kernels.sc_vertex_radius(self.n, SC_TOL))

    @functools.cached_property
    def vertices(self) -> np.ndarray:
        """V_k = f(e^{k pi i / n}) = R e^{k pi i / n}; edge k runs from V_{k-1} to V_k.

        Taken from the rotational symmetry: f is only Hoelder continuous at a
        vertex preimage, so evaluating it at the rounded root of unity would
        cost about half the significant digits.
        """
        return self.radius * self.vertex_preimages

    @functools.cached_property
    def midpoints(self) -> np.ndarray:
        """f(w_k), the midpoint of edge k."""
        return sc_map(self.n, self.midpoint_preimages)

    def edge_direction(self, k: int) -> complex:
        v = self.vertices
        d = v[(k - 1) % (2 * self.n)] - v[(k - 2) % (2 * self.n)]
        return complex(d / abs(d))

    def edge_lengths(self) -> np.ndarray:
        v = self.vertices
        return np.abs(v - np.roll(v, 1))

    def vertex_angles(self) -> np.ndarray:
        v = self.vertices
        a = np.roll(v, 1) - v
        b = np.roll(v, -1) - v
        return np.abs(np.angle(a / b))

    def arc_height(self, k: int) -> float:
        """Boundary height on I_k (from w_k to w_{k+1})."""
        return 1.0 if k % 2 == 1 else 0.0

    def boundary_data(self) -> BoundaryData:
        return BoundaryData.from_jumps("disk", self.midpoint_angles,
                                       [self.arc_height(k) for k in range(1, 2 * self.n + 1)])

    def jump_chart(self, k: int) -> BlowUpChart:
        """Blow-up at w_k; ``b`` is the height of I_k (counterclockwise side)."""
        b = self.arc_height(k)
        a = self.arc_height(k - 1 if k > 1 else 2 * self.n)
        return BlowUpChart(complex(self.midpoint_preimages[k - 1]), a, b, chart="disk")


def _boundary_height(chart: PolygonChart, w: np.ndarray) -> np.ndarray:
    ang = np.angle(w)
    jumps = chart.midpoint_angles
    rel = np.mod(ang - jumps[0], 2 * np.pi)
    k = np.searchsorted(jumps - jumps[0], rel, side="right")
    on_jump = np.isclose(np.mod(rel[:, None] - (jumps - jumps[0])[None, :] + np.pi, 2 * np.pi) - np.pi,
                         0.0, atol=1e-15).any(axis=1)
    if np.any(on_jump):
        raise ValueError("height is undefined at an edge-midpoint preimage")
    return np.where(k % 2 == 1, 1.0, 0.0)


def schwarz_patch(n: int) -> SurfaceMap:
    """X = (f, t) on the closed disk minus the jump points."""
    chart = PolygonChart(n)

    def planar(p):
        return sc_map(n, p)

    def height(p):
        p = np.asarray(p, dtype=complex)
        flat = p.ravel()
        out = np.empty(flat.shape)
        inner = np.abs(flat) < 1
        if np.any(inner):
            out[inner] = kernels.polygon_height_many(n, flat[inner])
        if np.any(~inner):
            out[~inner] = _boundary_height(chart, flat[~inner])
        return out.reshape(p.shape) if p.ndim else float(out[0])

    surf = SurfaceMap(planar, height, "disk", provenance="harmonic-pair",
                      name=f"schwarz-patch-{n}", singular=tuple(chart.midpoint_preimages))
    surf.polygon = chart
    surf.boundary_data = chart.boundary_data()
    return surf


def _grade(count: int) -> np.ndarray:
    """Radii 0 < rho_1 < ... < rho_count = 1, denser toward the boundary."""
    s = np.arange(1, count + 1) / count
    return np.sin(0.5 * np.pi * s)


def schwarz_patch_mesh(n: int = 2, resolution: int = 8) -> tuple:
    """Closed triangle mesh of the patch including its boundary.

    The boundary ring carries exact boundary values; each jump point is
    replaced by the isotropic segment {f(w_k)} x {j / resolution}, fanned to
    the neighbouring interior node, so copies under the boundary symmetries
    share seam vertices exactly.  Returns (mesh, faces) where ``faces[k]``
    lists the vertex indices fixed setwise by generator k of
    :func:`schwarz_d_generators`.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    chart = PolygonChart(n)
    surf = schwarz_patch(n)
    m = resolution
    rings = _grade(2 * m)
    # angular nodes: each arc I_k split into 2m steps with its vertex exactly in the middle
    per_arc = 2 * m
    step = np.pi / n / per_arc
    phis = (chart.midpoint_angles[0] + step * np.arange(2 * n * per_arc))
    nphi = phis.size
    jump_cols = np.arange(0, nphi, per_arc)          # column of w_k (k = 1..2n)
    vertex_cols = jump_cols + m                       # column of V_k

    params = [0j]
    for rho in rings[:-1]:
        params.extend(rho * np.exp(1j * phis))
    ring_start = [1 + i * nphi for i in range(len(rings) - 1)]
    outer = len(params)
    params.extend(np.exp(1j * phis))
    params = np.array(params)

    verts = np.empty((params.size, 3))
    inner = slice(0, outer)
    verts[inner] = surf(params[inner])
    bmask = np.ones(nphi, dtype=bool)
    bmask[jump_cols] = False
    bz = sc_map(n, params[outer:][bmask])
    bt = _boundary_height(chart, params[outer:][bmask])
    verts[outer:][bmask] = np.stack([bz.real, bz.imag, bt], axis=-1)
    # exact polygon vertices and midpoints on the boundary ring
    vz = chart.vertices
    for k in range(2 * n):
        verts[outer + vertex_cols[k], :2] = (vz[k].real, vz[k].imag)
    flags = np.zeros(params.size, dtype=np.uint8)
    flags[outer:] = BOUNDARY

    # seam vertices for each jump: heights 0..1 in m steps
    seam_ids = {}
    extra_v, extra_p = [], []
    mids = chart.midpoints
    for k in range(2 * n):
        ids = []
        for j in range(m + 1):
            ids.append(params.size + len(extra_v))
            extra_v.append((mids[k].real, mids[k].imag, j / m))
            extra_p.append(params[outer + jump_cols[k]])
        seam_ids[k] = ids
    verts = np.vstack([verts, np.array(extra_v)])
    params = np.concatenate([params, np.array(extra_p)])
    flags = np.concatenate([flags, np.full(len(extra_v), BOUNDARY | SEAM, dtype=np.uint8)])

    def node(i, j):
        j %= nphi
        if i < len(ring_start):
            return ring_start[i] + j
        return outer + j

    tris = []
    for j in range(nphi):
        tris.append((0, node(0, j), node(0, j + 1)))
    jump_lookup = {int(c): k for k, c in enumerate(jump_cols)}
    for i in range(len(rings) - 1):
        last = i == len(rings) - 2
        for j in range(nphi):
            A, B, C, D = node(i, j), node(i, j + 1), node(i + 1, j + 1), node(i + 1, j)
            if last:
                jr, jl = (j + 1) % nphi, j
                if jr in jump_lookup:
                    k = jump_lookup[jr]
                    a = chart.jump_chart(k + 1).a
                    C = seam_ids[k][int(round(a * m))]
                if jl in jump_lookup:
                    k = jump_lookup[jl]
                    b = chart.jump_chart(k + 1).b
                    D = seam_ids[k][int(round(b * m))]
            tris.append((A, D, C))
            tris.append((A, C, B))
    for k in range(2 * n):
        P = node(len(rings) - 2, int(jump_cols[k]))
        jc = chart.jump_chart(k + 1)
        ia, ib = int(round(jc.a * m)), int(round(jc.b * m))
        order = range(ia, ib + 1) if ib > ia else range(ia, ib - 1, -1)
        seq = [seam_ids[k][j] for j in order]
        for x, y in zip(seq, seq[1:]):
            tris.append((P, x, y))

    # the jump nodes of the boundary ring are replaced by seams; fill then drop them
    for k in range(2 * n):
        verts[outer + jump_cols[k]] = (mids[k].real, mids[k].imag, 0.5)
    mesh, remap = Mesh(verts, np.array(tris, dtype=np.int64), flags, params=params).compact()
    faces = {}
    for k in range(2 * n):
        faces[k] = remap[np.array(seam_ids[k])]
        lo = int(jump_cols[k])
        h = int(round(chart.arc_height(k + 1) * m))
        half = [seam_ids[k][h]] + [outer + c for c in range(lo + 1, lo + m + 1)]
        faces[2 * n + k] = remap[np.array(half)]
    return mesh, faces


def schwarz_d_generators(n: int = 2) -> list:
    """Boundary symmetries of the patch.

    Index k (0-based, edge k+1): 180 degree rotation about the horizontal
    line through (f(w_{k+1}), 1/2) parallel to the edge (isotropic line);
    index 2n + k: rotation about the half edge f(w_{k+1}) -> V_{k+1}, which
    lies at the height of I_{k+1}.
    """
    chart = PolygonChart(n)
    iso, edge = [], []
    for k in range(1, 2 * n + 1):
        m = complex(chart.midpoints[k - 1])
        u = chart.edge_direction(k)
        iso.append(MotionI3.rotation_about_line(m, u, 0.5))
        edge.append(MotionI3.rotation_about_line(m, u, chart.arc_height(k)))
    return iso + edge


def seam_residual(result: TilingResult, faces: dict, generators: list) -> float:
    """Largest gap between copies that share a boundary face."""
    worst = 0.0
    for i, g in enumerate(result.motions):
        for k, s in enumerate(generators):
            j = result.index.get(g.compose(s).fingerprint())
            if j is None:
                continue
            ids = faces[k]
            A = result.meshes[i].vertices[ids]
            B = result.meshes[j].vertices[ids]
            d = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1).min(axis=1).max()
            worst = max(worst, float(d))
    return worst


def schwarz_d_tiling(depth: int, n: int = 2, resolution: int = 8) -> TilingResult:
    """Orbit of the patch under its boundary symmetries (triply periodic)."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    seed, faces = schwarz_patch_mesh(n, resolution)
    gens = schwarz_d_generators(n)
    # rotations about an isotropic line's mid-height axis keep the surface
    # orientation ((r, theta) -> (-r, pi - theta)); edge rotations reverse it
    flips = [False] * (2 * n) + [True] * (2 * n)
    result = orbit_tiling(seed, gens, depth, flips=flips)
    result.seam_residual = seam_residual(result, faces, gens)
    result.faces = faces
    result.generators = gens
    return result
