"""Parameter grids, triangle meshes, harmonicity residuals and OBJ/PLY I/O."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

__all__ = [
    "INTERIOR",
    "BOUNDARY",
    "SEAM",
    "SINGULAR",
    "ParamGrid",
    "Mesh",
    "MeshError",
    "sample_grid",
    "build_mesh",
    "laplacian_residual",
    "weld",
    "export",
    "write_obj",
    "read_obj",
    "write_ply",
    "read_ply",
    "worker_count",
]

INTERIOR = 0
BOUNDARY = 1
SEAM = 2
SINGULAR = 4

WELD_TOL = 1e-9
DISK_MARGIN = 1e-4


class MeshError(ValueError):
    pass


def worker_count() -> int:
    """Worker cap from ISOFLECT_THREADS (default: CPU count, at most 8)."""
    default = min(8, os.cpu_count() or 1)
    raw = os.environ.get("ISOFLECT_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        return default
    return max(1, n)


# -- grids ------------------------------------------------------------------------------


@dataclass
class ParamGrid:
    """Structured parameter grid (nu, nv) of complex chart coordinates.

    ``periodic`` closes the grid in the second index (angular direction).
    For blow-up charts the parameters are r + i theta.
    """

    chart: str
    params: np.ndarray
    periodic: bool = False
    blowup: object = None

    @property
    def shape(self) -> tuple:
        return self.params.shape


def _linspace_with_zero(lo: float, hi: float, count: int) -> np.ndarray:
    vals = np.linspace(lo, hi, count)
    if lo < 0 < hi:
        k = int(np.argmin(np.abs(vals)))
        vals[k] = 0.0
        if not (np.all(np.diff(vals) > 0)):
            raise MeshError("grid resolution too small to include r = 0")
    return vals


def sample_grid(chart: str, resolution: int, bounds, blowup=None) -> ParamGrid:
    """Structured grid on a chart.

    ``half-plane``: polar grid, bounds (r0, r1, theta0, theta1).
    ``disk``: polar grid, bounds (rho0, rho1[, phi0, phi1]); radii are capped
    at 1 - 1e-4; a full turn is periodic.
    ``strip``/``rect``/``plane``: Cartesian, bounds (x0, x1, y0, y1).
    ``blowup``: (r, theta) grid, bounds (r0, r1, theta0, theta1); r = 0 is
    included exactly when the range straddles it.
    """
    if resolution < 2:
        raise MeshError("resolution must be >= 2")
    b = [float(x) for x in bounds]
    if len(b) < 2 or any(not math.isfinite(x) for x in b):
        raise MeshError("bounds must be finite numbers")
    if chart == "disk":
        rho0, rho1 = b[0], min(b[1], 1.0 - DISK_MARGIN)
        phi0, phi1 = (b[2], b[3]) if len(b) >= 4 else (0.0, 2 * math.pi)
        if not (0 <= rho0 < rho1) or not phi0 < phi1:
            raise MeshError("empty bounds")
        full = abs(phi1 - phi0 - 2 * math.pi) < 1e-12
        rho = np.linspace(rho0, rho1, resolution)
        phi = np.linspace(phi0, phi1, resolution, endpoint=not full)
        return ParamGrid(chart, rho[:, None] * np.exp(1j * phi[None, :]), periodic=full)
    if len(b) != 4 or not (b[0] < b[1] and b[2] < b[3]):
        raise MeshError("empty bounds")
    if chart == "half-plane":
        if b[0] <= 0 or b[2] <= 0 or b[3] >= math.pi:
            raise MeshError("half-plane polar bounds must satisfy r > 0, 0 < theta < pi")
        r = np.linspace(b[0], b[1], resolution)
        th = np.linspace(b[2], b[3], resolution)
        return ParamGrid(chart, r[:, None] * np.exp(1j * th[None, :]))
    if chart == "blowup":
        if b[2] <= 0 or b[3] >= math.pi:
            raise MeshError("blow-up bounds must satisfy 0 < theta < pi")
        r = _linspace_with_zero(b[0], b[1], resolution)
        th = np.linspace(b[2], b[3], resolution)
        return ParamGrid(chart, r[:, None] + 1j * th[None, :], blowup=blowup)
    if chart in ("strip", "rect", "plane"):
        x = np.linspace(b[0], b[1], resolution)
        y = np.linspace(b[2], b[3], resolution)
        return ParamGrid(chart, x[:, None] + 1j * y[None, :])
    raise MeshError(f"unknown chart {chart!r}")


# -- meshes -----------------------------------------------------------------------------


@dataclass
class Mesh:
    """Indexed triangle mesh with float64 vertices (x, y, t) and uchar flags."""

    vertices: np.ndarray
    triangles: np.ndarray
    flags: np.ndarray = None
    params: np.ndarray = None
    motion: object = None

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.flags is None:
            self.flags = np.zeros(len(self.vertices), dtype=np.uint8)
        self.flags = np.asarray(self.flags, dtype=np.uint8)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self, space: str = "world") -> np.ndarray:
        if space == "param":
            p = np.stack([self.params.real, self.params.imag, np.zeros(len(self.params))], axis=-1)
        else:
            p = self.vertices
        a, b, c = (p[self.triangles[:, k]] for k in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def validate(self, min_area: float = 1e-12) -> list:
        problems = []
        if len(self.flags) != self.n_vertices:
            problems.append("flag count does not match vertex count")
        if self.n_triangles and (self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices):
            problems.append("triangle index out of range")
            return problems
        if not np.all(np.isfinite(self.vertices)):
            problems.append("non-finite vertex")
        if self.n_triangles:
            small = int(np.sum(self.triangle_areas("world") <= min_area))
            if small:
                problems.append(f"{small} degenerate triangles")
        return problems

    def bbox(self) -> tuple:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def transformed(self, motion, flip: bool = False) -> "Mesh":
        tris = self.triangles[:, ::-1].copy() if flip else self.triangles
        return Mesh(motion.apply(self.vertices), tris, self.flags.copy(), self.params, motion=motion)

    def compact(self) -> tuple:
        """Drop unreferenced vertices; returns (mesh, old -> new index map)."""
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        remap = -np.ones(self.n_vertices, dtype=np.int64)
        remap[used] = np.arange(int(used.sum()))
        params = self.params[used] if self.params is not None else None
        return Mesh(self.vertices[used], remap[self.triangles], self.flags[used], params,
                    self.motion), remap

    def edge_orientation_conflicts(self) -> int:
        """Interior edges whose two triangles traverse them in the same direction."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        directed = {}
        conflicts = 0
        for a, b in map(tuple, e):
            if (a, b) in directed:
                conflicts += 1
            directed[(a, b)] = True
        return conflicts

    def boundary_edges(self) -> int:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return int(np.sum(counts == 1))


def _is_pure(surface) -> bool:
    """False if the map or any surface it extends caches state per query."""
    while surface is not None:
        if not getattr(surface, "pure", True):
            return False
        surface = getattr(surface, "base", None)
    return True


def _evaluate_chunks(fn, params: np.ndarray, pure: bool) -> np.ndarray:
    flat = params.ravel()
    workers = worker_count() if pure else 1
    if workers <= 1 or flat.size < 256:
        return np.asarray(fn(flat)).reshape(params.shape + (3,))
    chunks = np.array_split(flat, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, chunks))
    return np.concatenate(parts).reshape(params.shape + (3,))


def build_mesh(surface, grid: ParamGrid, metric=None) -> Mesh:
    """Evaluate ``surface`` on the grid and triangulate (two triangles per cell).

    Nodes with identical parameters are merged and triangles that collapse
    in parameter space are dropped.  ``metric`` (optional callable) flags
    singular nodes where it is below 1e-10.
    """
    P = grid.params
    nu, nv = P.shape
    try:
        V = _evaluate_chunks(surface, P, _is_pure(surface))
    except (ValueError, ArithmeticError) as exc:
        bad = _first_bad(surface, P)
        raise MeshError(f"surface evaluation failed at node {bad}: {exc}") from exc
    if not np.all(np.isfinite(V)):
        idx = np.argwhere(~np.all(np.isfinite(V), axis=-1))[0]
        raise MeshError(f"non-finite surface value at node {complex(P[tuple(idx)])!r}")
    flat_p = P.ravel()
    uniq, first, inverse = np.unique(flat_p, return_index=True, return_inverse=True)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    node_id = rank[inverse].reshape(nu, nv)
    verts = V.reshape(-1, 3)[np.sort(first)]
    params = flat_p[np.sort(first)]

    flags = np.zeros(len(verts), dtype=np.uint8)
    edge = np.zeros((nu, nv), dtype=bool)
    edge[0, :] = edge[-1, :] = True
    if not grid.periodic:
        edge[:, 0] = edge[:, -1] = True
    flags[node_id[edge]] |= BOUNDARY
    if grid.chart == "blowup":
        flags[node_id[P.real == 0]] |= SEAM
    if metric is not None:
        m = np.asarray(metric(params), dtype=float)
        flags[m < 1e-10] |= SINGULAR

    cols = nv if grid.periodic else nv - 1
    tris = []
    for i in range(nu - 1):
        for j in range(cols):
            j1 = (j + 1) % nv
            A, B, C, D = node_id[i, j], node_id[i, j1], node_id[i + 1, j1], node_id[i + 1, j]
            tris.append((A, D, C))
            tris.append((A, C, B))
    tris = np.array(tris, dtype=np.int64).reshape(-1, 3)
    mesh = Mesh(verts, tris, flags, params=params)
    keep = mesh.triangle_areas("param") > 1e-12
    mesh.triangles = mesh.triangles[keep]
    return mesh


def _first_bad(surface, P):
    for p in P.ravel():
        try:
            v = surface(np.array([p]))
            if not np.all(np.isfinite(v)):
                return complex(p)
        except (ValueError, ArithmeticError):
            return complex(p)
    return None


# -- harmonicity -------------------------------------------------------------------------


def laplacian_residual(surface, params, rel_step: float = 5e-4) -> np.ndarray:
    """Scaled finite-difference Laplacian of (x, y, t) at chart parameters.

    For a sample at feature distance d (chart boundary or singularity) the
    step is h = rel_step * min(d, 1) and the residual is
    |Delta_h X| * min(d, 1)^2, so it carries the units of X.  Blow-up charts
    (p = r + i theta) use the polar operator r^2 u_rr + r u_r + u_theta^2,
    which is r^2 times the Laplacian in the local chart and stays regular on
    the seam r = 0.  Returns the residual per sample (max over coordinates).
    """
    p = np.atleast_1d(np.asarray(params, dtype=complex)).ravel()
    ell = np.minimum(np.asarray(surface.feature_distance(p), dtype=float), 1.0)
    if np.any(ell <= 0):
        raise ValueError("laplacian samples must be interior")
    out = np.empty(p.size)
    polar = surface.chart == "blowup"
    for k, (c, l) in enumerate(zip(p, ell)):
        h = rel_step * l
        stencil = np.array([c, c + h, c - h, c + 1j * h, c - 1j * h])
        v = surface.cluster(stencil)
        if polar:
            r = c.real
            urr = (v[1] - 2 * v[0] + v[2]) / h ** 2
            ur = (v[1] - v[2]) / (2 * h)
            utt = (v[3] - 2 * v[0] + v[4]) / h ** 2
            lap = r * r * urr + r * ur + utt
        else:
            lap = (v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / h ** 2
        out[k] = float(np.max(np.abs(lap))) * l * l
    return out


def cauchy_riemann_residual(surface, params, rel_step: float = 1e-4) -> np.ndarray:
    """|h_y - i h_x| / |h_x| at chart parameters (central differences)."""
    p = np.atleast_1d(np.asarray(params, dtype=complex)).ravel()
    ell = np.minimum(np.asarray(surface.feature_distance(p), dtype=float), 1.0)
    out = np.empty(p.size)
    for k, (c, l) in enumerate(zip(p, ell)):
        h = rel_step * l
        v = surface.cluster(np.array([c, c + h, c - h, c + 1j * h, c - 1j * h]))
        z = v[:, 0] + 1j * v[:, 1]
        hx = (z[1] - z[2]) / (2 * h)
        hy = (z[3] - z[4]) / (2 * h)
        out[k] = abs(hy - 1j * hx) / max(abs(hx), 1e-300)
    return out


# -- welding ------------------------------------------------------------------------------


def weld(meshes, tol: float = WELD_TOL) -> Mesh:
    """Merge meshes, snapping vertices closer than ``tol`` to one copy."""
    verts = np.concatenate([m.vertices for m in meshes])
    flags = np.concatenate([m.flags for m in meshes])
    offsets = np.cumsum([0] + [m.n_vertices for m in meshes[:-1]])
    tris = np.concatenate([m.triangles + o for m, o in zip(meshes, offsets)])
    cell = np.floor(verts / (4 * tol)).astype(np.int64)
    buckets: dict = {}
    rep = np.arange(len(verts))
    for i, key in enumerate(map(tuple, cell)):
        found = -1
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for j in buckets.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        if np.max(np.abs(verts[j] - verts[i])) <= tol:
                            found = j
                            break
                    if found >= 0:
                        break
                if found >= 0:
                    break
            if found >= 0:
                break
        if found >= 0:
            rep[i] = found
            flags[found] |= flags[i]
        else:
            buckets.setdefault(key, []).append(i)
    tris = rep[tris]
    merged = Mesh(verts, tris, flags)
    merged, _ = merged.compact()
    return merged


# -- export ------------------------------------------------------------------------------


def write_obj(mesh: Mesh, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# isoflect mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles\n")
        for x, y, t in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {t:.17g}\n")
        for a, b, c in mesh.triangles + 1:
            fh.write(f"f {a} {b} {c}\n")


def read_obj(path) -> Mesh:
    verts, tris = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(v) for v in parts[1:4]])
            elif parts[0] == "f":
                tris.append([int(v.split("/")[0]) - 1 for v in parts[1:4]])
    return Mesh(np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(tris, dtype=np.int64).reshape(-1, 3))


_PLY_VERTEX = np.dtype([("x", "<f8"), ("y", "<f8"), ("t", "<f8"), ("flag", "u1")])
_PLY_FACE = np.dtype([("count", "u1"), ("idx", "<i4", (3,))])


def write_ply(mesh: Mesh, path) -> None:
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        "comment isoflect mesh\n"
        f"element vertex {mesh.n_vertices}\n"
        "property double x\n"
        "property double y\n"
        "property double t\n"
        "property uchar flag\n"
        f"element face {mesh.n_triangles}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    v = np.empty(mesh.n_vertices, dtype=_PLY_VERTEX)
    v["x"], v["y"], v["t"] = mesh.vertices.T
    v["flag"] = mesh.flags
    f = np.empty(mesh.n_triangles, dtype=_PLY_FACE)
    f["count"] = 3
    f["idx"] = mesh.triangles
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(v.tobytes())
        fh.write(f.tobytes())


def read_ply(path) -> Mesh:
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    if "format binary_little_endian 1.0" not in header:
        raise MeshError("only binary little-endian PLY is supported")
    counts = {}
    for line in header:
        parts = line.split()
        if parts[:1] == ["element"]:
            counts[parts[1]] = int(parts[2])
    nv, nf = counts.get("vertex", 0), counts.get("face", 0)
    v = np.frombuffer(data, dtype=_PLY_VERTEX, count=nv, offset=end)
    f = np.frombuffer(data, dtype=_PLY_FACE, count=nf, offset=end + nv * _PLY_VERTEX.itemsize)
    if nf and np.any(f["count"] != 3):
        raise MeshError("only triangle faces are supported")
    verts = np.stack([v["x"], v["y"], v["t"]], axis=-1)
    return Mesh(verts, f["idx"].astype(np.int64), v["flag"].copy())


def export(mesh: Mesh, fmt: str, path) -> None:
    fmt = fmt.lower()
    if fmt == "obj":
        write_obj(mesh, path)
    elif fmt == "ply":
        write_ply(mesh, path)
    else:
        raise MeshError(f"unknown format {fmt!r}")
