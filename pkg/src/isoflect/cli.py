"""Command-line front end.

    isoflect {generate,reflect,tile,conjugate,verify,sc-map}
             [--config PATH] [--preset NAME] [--n INT] [--depth INT]
             [--out PATH] [--format obj|ply] [--tol REAL]

A job is one JSON document (see ``docs/grammar.md``); flags override the
corresponding config fields.  Reports are JSON with sorted keys and carry the
sha256 of the canonical config, so identical jobs give byte-identical output.
Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import expr as ex
from . import verify as vf
from .harmonic import BlowUpChart, BoundaryData
from .mesh import Mesh, MeshError, build_mesh, export, sample_grid, weld
from .quad import DEFAULT_TOL, QuadratureError
from .reflect import ArcChart, ReflectionError, ValidationError, extend_isotropic, reflect_horizontal
from .scpoly import MAX_N, PolygonChart, schwarz_d_tiling, schwarz_patch, schwarz_patch_mesh
from .weierstrass import (
    CHARTS,
    ChartError,
    WeierstrassData,
    conjugate,
    from_harmonic_pair,
    helicoid,
    helicoid_data,
    isotropic_catenoid,
    singular_points,
    surface,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
PRESETS = ("helicoid", "isotropic-catenoid", "schwarz-d")
COMMANDS = ("generate", "reflect", "tile", "conjugate", "verify", "sc-map")

DEFAULT_TOLERANCES = {
    "quadrature": DEFAULT_TOL,
    "harmonicity": 1e-5,
    "conformality": 1e-6,
    "involution": 1e-10,
    "poisson": 1e-9,
    "sc_symmetry": 1e-8,
    "seam": 1e-8,
    "boundary_height": 1e-6,
    "straightness": 1e-8,
    "endpoint": 1e-4,
}

DEFAULT_BOUNDS = {
    "half-plane": [0.1, 3.0, 0.02, math.pi - 0.02],
    "disk": [0.0, 0.95],
    "strip": [-2.0, 2.0, 0.05, math.pi - 0.05],
}

HARMONICITY_SAMPLES = 500


class ConfigError(ValueError):
    """Invalid job configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# -- configuration ----------------------------------------------------------------------


def _num(doc, path, *, positive=False, integer=False, minimum=None):
    if isinstance(doc, bool) or not isinstance(doc, (int, float)):
        raise ConfigError(path, "expected a number")
    if integer and (not float(doc).is_integer()):
        raise ConfigError(path, "expected an integer")
    if not math.isfinite(float(doc)):
        raise ConfigError(path, "must be finite")
    if positive and doc <= 0:
        raise ConfigError(path, "must be positive")
    if minimum is not None and doc < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return int(doc) if integer else float(doc)


def _complex(doc, path) -> complex:
    if isinstance(doc, (int, float)) and not isinstance(doc, bool):
        return complex(doc)
    if isinstance(doc, list) and len(doc) == 2:
        return complex(_num(doc[0], f"{path}[0]"), _num(doc[1], f"{path}[1]"))
    raise ConfigError(path, "expected a number or a [re, im] pair")


def _expr(doc, path) -> ex.ComplexExpr:
    if not isinstance(doc, str):
        raise ConfigError(path, "expected an expression string")
    try:
        return ex.parse(doc)
    except ex.ExprSyntaxError as exc:
        raise ConfigError(path, str(exc)) from None


def _object(doc, path, allowed) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    for key in doc:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")
    return doc


@dataclass
class JobConfig:
    """Validated job description."""

    source: str                       # "preset" | "weierstrass" | "harmonic_pair"
    preset: str | None = None
    weierstrass: WeierstrassData | None = None
    harmonic: dict | None = None
    c: float = 0.0
    n: int = 2
    bounds: list | None = None
    resolution: int = 32
    reflections: list = field(default_factory=list)
    depth: int = 1
    out: str | None = None
    report: str | None = None
    fmt: str = "obj"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    raw: dict = field(default_factory=dict)

    @property
    def chart(self) -> str:
        if self.source == "weierstrass":
            return self.weierstrass.chart
        if self.source == "harmonic_pair":
            return self.harmonic["chart"]
        return "disk" if self.preset == "schwarz-d" else "half-plane"

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.raw).encode()).hexdigest()


TOP_FIELDS = ("surface", "c", "n", "chart_bounds", "resolution", "reflections", "tiling", "output",
              "tolerances")


def _parse_surface(doc, cfg: JobConfig):
    doc = _object(doc, "surface", ("preset", "weierstrass", "harmonic_pair"))
    given = [k for k in ("preset", "weierstrass", "harmonic_pair") if k in doc]
    if len(given) != 1:
        raise ConfigError("surface", "exactly one of preset, weierstrass, harmonic_pair is required")
    kind = given[0]
    cfg.source = kind
    if kind == "preset":
        if doc["preset"] not in PRESETS:
            raise ConfigError("surface.preset", f"unknown preset {doc['preset']!r}; choose from {PRESETS}")
        cfg.preset = doc["preset"]
    elif kind == "weierstrass":
        w = _object(doc["weierstrass"], "surface.weierstrass",
                    ("F", "G", "c", "basepoint", "chart", "singularities", "offset"))
        for key in ("F", "G"):
            if key not in w:
                raise ConfigError(f"surface.weierstrass.{key}", "missing")
        chart = w.get("chart", "half-plane")
        if chart not in CHARTS:
            raise ConfigError("surface.weierstrass.chart", f"unknown chart {chart!r}")
        sing = w.get("singularities", [])
        if not isinstance(sing, list):
            raise ConfigError("surface.weierstrass.singularities", "expected a list")
        off = w.get("offset", [0, 0, 0])
        if not isinstance(off, list) or len(off) != 3:
            raise ConfigError("surface.weierstrass.offset", "expected three entries")
        try:
            cfg.weierstrass = WeierstrassData(
                F=_expr(w["F"], "surface.weierstrass.F"),
                G=_expr(w["G"], "surface.weierstrass.G"),
                basepoint=None if "basepoint" not in w else _complex(w["basepoint"], "surface.weierstrass.basepoint"),
                c=_num(w.get("c", cfg.c), "surface.weierstrass.c"),
                chart=chart,
                singularities=tuple(_complex(s, f"surface.weierstrass.singularities[{i}]")
                                    for i, s in enumerate(sing)),
                offset=tuple(_complex(v, f"surface.weierstrass.offset[{i}]") for i, v in enumerate(off)),
            )
        except ChartError as exc:
            raise ConfigError("surface.weierstrass.basepoint", str(exc)) from None
    else:
        h = _object(doc["harmonic_pair"], "surface.harmonic_pair", ("h", "t", "chart"))
        for key in ("h", "t"):
            if key not in h:
                raise ConfigError(f"surface.harmonic_pair.{key}", "missing")
        chart = h.get("chart", "half-plane")
        if chart not in CHARTS:
            raise ConfigError("surface.harmonic_pair.chart", f"unknown chart {chart!r}")
        cfg.harmonic = {"h": _expr(h["h"], "surface.harmonic_pair.h"),
                        "t": _expr(h["t"], "surface.harmonic_pair.t"), "chart": chart}


def _parse_reflection(doc, path) -> dict:
    doc = _object(doc, path, ("kind", "arc", "height", "seam", "jump", "a", "b", "repeat"))
    kind = doc.get("kind")
    if kind not in ("horizontal", "isotropic"):
        raise ConfigError(f"{path}.kind", "expected 'horizontal' or 'isotropic'")
    out = {"kind": kind, "repeat": _num(doc.get("repeat", 1), f"{path}.repeat", integer=True, minimum=1)}
    arc = doc.get("arc", {"kind": "line", "point": [0, 0], "direction": [1, 0]})
    try:
        out["arc"] = ArcChart.from_json(arc)
    except (KeyError, TypeError, ValueError, ex.ExprSyntaxError) as exc:
        raise ConfigError(f"{path}.arc", f"invalid arc ({exc})") from None
    if kind == "horizontal":
        out["height"] = _num(doc.get("height", 0.0), f"{path}.height")
        seam = doc.get("seam", [0.0, None])
        if not isinstance(seam, list) or len(seam) != 2:
            raise ConfigError(f"{path}.seam", "expected [lo, hi] (null for infinity)")
        lo = -math.inf if seam[0] is None else _num(seam[0], f"{path}.seam[0]")
        hi = math.inf if seam[1] is None else _num(seam[1], f"{path}.seam[1]")
        if not lo < hi:
            raise ConfigError(f"{path}.seam", "empty interval")
        out["seam"] = (lo, hi)
    else:
        out["jump"] = _complex(doc.get("jump", 0.0), f"{path}.jump")
        out["a"] = None if "a" not in doc else _num(doc["a"], f"{path}.a")
        out["b"] = None if "b" not in doc else _num(doc["b"], f"{path}.b")
    return out


def parse_config(doc) -> JobConfig:
    """Validate a config document; raises :class:`ConfigError`."""
    doc = _object(doc, "", TOP_FIELDS)
    cfg = JobConfig(source="", raw=copy.deepcopy(doc))
    cfg.c = _num(doc.get("c", 0.0), "c")
    cfg.n = _num(doc.get("n", 2), "n", integer=True, minimum=2)
    if cfg.n > MAX_N:
        raise ConfigError("n", f"must be <= {MAX_N}")
    if "surface" not in doc:
        raise ConfigError("surface", "missing (give a preset, weierstrass data or a harmonic pair)")
    _parse_surface(doc["surface"], cfg)
    cfg.resolution = _num(doc.get("resolution", 32), "resolution", integer=True)
    if cfg.resolution < 2:
        raise ConfigError("resolution", "must be >= 2")
    if "chart_bounds" in doc:
        b = doc["chart_bounds"]
        if not isinstance(b, list) or len(b) not in (2, 4):
            raise ConfigError("chart_bounds", "expected 2 or 4 numbers")
        cfg.bounds = [_num(x, f"chart_bounds[{i}]") for i, x in enumerate(b)]
    refl = doc.get("reflections", [])
    if not isinstance(refl, list):
        raise ConfigError("reflections", "expected a list")
    cfg.reflections = [_parse_reflection(r, f"reflections[{i}]") for i, r in enumerate(refl)]
    tiling = _object(doc.get("tiling", {}), "tiling", ("depth",))
    cfg.depth = _num(tiling.get("depth", 1), "tiling.depth", integer=True, minimum=0)
    out = _object(doc.get("output", {}), "output", ("mesh", "report", "format"))
    cfg.out = out.get("mesh")
    cfg.report = out.get("report")
    for key in ("mesh", "report"):
        if key in out and not isinstance(out[key], str):
            raise ConfigError(f"output.{key}", "expected a path string")
    cfg.fmt = out.get("format", _format_from_path(cfg.out))
    if cfg.fmt not in ("obj", "ply"):
        raise ConfigError("output.format", "expected 'obj' or 'ply'")
    tols = _object(doc.get("tolerances", {}), "tolerances", tuple(DEFAULT_TOLERANCES))
    for key, val in tols.items():
        cfg.tolerances[key] = _num(val, f"tolerances.{key}", positive=True)
    if cfg.weierstrass is not None and "c" in doc and "c" not in doc["surface"]["weierstrass"]:
        cfg.weierstrass = _replace_c(cfg.weierstrass, cfg.c)
    return cfg


def _format_from_path(path) -> str:
    if path and str(path).lower().endswith(".ply"):
        return "ply"
    return "obj"


def _replace_c(data: WeierstrassData, c: float) -> WeierstrassData:
    from dataclasses import replace

    return replace(data, c=float(c))


def merge_flags(doc: dict, args) -> dict:
    """Apply command-line overrides to the config document."""
    doc = copy.deepcopy(doc)
    if args.preset is not None:
        doc["surface"] = {"preset": args.preset}
    if args.n is not None:
        doc["n"] = args.n
    if args.depth is not None:
        doc.setdefault("tiling", {})["depth"] = args.depth
    if args.out is not None or args.format is not None:
        out = doc.setdefault("output", {})
        if args.out is not None:
            out["mesh"] = args.out
        if args.format is not None:
            out["format"] = args.format
    if args.tol is not None:
        doc.setdefault("tolerances", {})["quadrature"] = args.tol
    return doc


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


# -- surfaces ---------------------------------------------------------------------------


def surface_data(cfg: JobConfig) -> WeierstrassData | None:
    if cfg.source == "weierstrass":
        return cfg.weierstrass
    if cfg.preset == "helicoid":
        return _replace_c(helicoid_data(), cfg.c)
    if cfg.preset == "isotropic-catenoid":
        return _replace_c(conjugate(helicoid_data()), cfg.c)
    return None


def build_surface(cfg: JobConfig):
    data = surface_data(cfg)
    if data is not None:
        return surface(data, cfg.tolerances["quadrature"])
    if cfg.preset == "schwarz-d":
        return schwarz_patch(cfg.n)
    h, t = cfg.harmonic["h"], cfg.harmonic["t"]
    return from_harmonic_pair(h, lambda p: np.real(ex.evaluate(t, p)), cfg.harmonic["chart"],
                              name="harmonic-pair")


def closed_form(cfg: JobConfig):
    if cfg.source == "preset" and cfg.c == 0.0:
        return {"helicoid": helicoid, "isotropic-catenoid": isotropic_catenoid}.get(cfg.preset, lambda: None)()
    return None


def interior_samples(chart: str, bounds, count: int = HARMONICITY_SAMPLES, seed: int = 0) -> np.ndarray:
    """Deterministic random interior parameters inside the mesh bounds."""
    rng = np.random.default_rng(seed)
    b = bounds
    if chart == "disk":
        rho = min(b[1], 0.999) * np.sqrt(rng.uniform((b[0] / b[1]) ** 2 if b[1] else 0, 1, count))
        lo, hi = (b[2], b[3]) if len(b) == 4 else (0.0, 2 * math.pi)
        return rho * np.exp(1j * rng.uniform(lo, hi, count))
    if chart == "half-plane":
        return rng.uniform(b[0], b[1], count) * np.exp(1j * rng.uniform(b[2], b[3], count))
    return rng.uniform(b[0], b[1], count) + 1j * rng.uniform(b[2], b[3], count)


def _bounds(cfg: JobConfig) -> list:
    return list(cfg.bounds) if cfg.bounds is not None else list(DEFAULT_BOUNDS[cfg.chart])


def _rounded(x, digits: int = 12):
    """Round floats for reports (stable text across platforms)."""
    if isinstance(x, dict):
        return {k: _rounded(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_rounded(v, digits) for v in x]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{digits}g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_rounded(x.real, digits), _rounded(x.imag, digits)]
    return x


def _base_report(cfg: JobConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "config_hash": cfg.config_hash(),
            "tolerances": dict(cfg.tolerances)}


def _mesh_summary(mesh: Mesh) -> dict:
    lo, hi = mesh.bbox()
    return {"vertices": mesh.n_vertices, "triangles": mesh.n_triangles,
            "bbox": {"min": list(lo), "max": list(hi)}, "bbox_diagonal": mesh.bbox_diagonal()}


def _write_outputs(cfg: JobConfig, report: dict, mesh: Mesh | None) -> None:
    if mesh is not None and cfg.out:
        export(mesh, cfg.fmt, cfg.out)
        report["mesh_file"] = Path(cfg.out).name
    text = json.dumps(_rounded(report), sort_keys=True, indent=2) + "\n"
    path = cfg.report or (str(Path(cfg.out).with_suffix(".json")) if cfg.out else None)
    if path:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _harmonicity(surf, chart, bounds, tol) -> dict:
    params = interior_samples(chart, bounds)
    res = vf.harmonicity(surf, params, tol)
    return {"max_residual": res.residual, "threshold": res.threshold, "passed": res.passed,
            "samples": int(params.size)}


# -- commands ---------------------------------------------------------------------------


def _generate_mesh(cfg: JobConfig, surf):
    if cfg.preset == "schwarz-d":
        mesh, _ = schwarz_patch_mesh(cfg.n, max(2, cfg.resolution // 4))
        return mesh
    grid = sample_grid(cfg.chart, cfg.resolution, _bounds(cfg))
    return build_mesh(surf, grid)


def cmd_generate(cfg: JobConfig, command: str = "generate") -> int:
    surf = build_surface(cfg)
    mesh = _generate_mesh(cfg, surf)
    bounds = _bounds(cfg)
    report = _base_report(cfg, command)
    report["surface"] = surf.name
    report["mesh"] = _mesh_summary(mesh)
    report["harmonicity"] = _harmonicity(surf, cfg.chart, bounds, cfg.tolerances["harmonicity"])
    data = surface_data(cfg)
    if data is not None:
        report["weierstrass"] = data.to_json()
        region = _region(cfg.chart, bounds)
        report["singular_points"] = [[z.real, z.imag] for z in singular_points(data, region)]
    else:
        report["singular_points"] = []
    ref = closed_form(cfg)
    if ref is not None and cfg.preset != "schwarz-d":
        params = interior_samples(cfg.chart, bounds, 200, seed=1)
        report["closed_form_residual"] = float(np.max(np.abs(surf(params) - ref(params))))
    problems = mesh.validate()
    report["mesh"]["problems"] = problems
    _write_outputs(cfg, report, mesh)
    return EXIT_OK if report["harmonicity"]["passed"] and not problems else EXIT_FAIL


def _region(chart, b) -> list:
    if chart == "half-plane":
        return [-b[1], b[1], 0.0, b[1]]
    if chart == "disk":
        return [-1.0, 1.0, -1.0, 1.0]
    return list(b)


def cmd_conjugate(cfg: JobConfig) -> int:
    data = surface_data(cfg)
    if data is None:
        raise ConfigError("surface", "conjugate needs Weierstrass data or a Weierstrass preset")
    cfg2 = copy.copy(cfg)
    cfg2.source, cfg2.preset, cfg2.weierstrass = "weierstrass", None, conjugate(data)
    return cmd_generate(cfg2, "conjugate")


def _jump_chart(surf, directive, cfg: JobConfig) -> BlowUpChart:
    w0 = directive["jump"]
    chart = "disk" if surf.chart == "disk" else "half-plane"
    a, b = directive["a"], directive["b"]
    if a is None or b is None:
        # boundary heights on either side, probed just inside the chart
        # (angle -> 0 extrapolated from three offsets, clear of the pole)
        probe = BlowUpChart(w0, 0.0, 0.0, chart=chart)
        d = 1e-3 * np.array([1.0, 2.0, 3.0])
        th = np.concatenate([math.pi - d, d])
        t = surf.height(probe.point(np.full(6, 1e-2), th))
        left = 3 * t[0] - 3 * t[1] + t[2]
        right = 3 * t[3] - 3 * t[4] + t[5]
        a = round(float(left), 8) if a is None else a
        b = round(float(right), 8) if b is None else b
    return BlowUpChart(w0, a, b, chart=chart)


def _seam_residual_horizontal(ext, seam, chart, count: int = 64) -> float:
    lo, hi = seam
    if chart == "half-plane":
        lo = max(lo, -4.0) if math.isfinite(lo) else -4.0
        hi = min(hi, 4.0) if math.isfinite(hi) else 4.0
        s = np.linspace(lo, hi, count + 2)[1:-1]
        s = s[np.abs(s) > 1e-2]
        return vf.seam_gap(ext, s + 0j, 1j)
    s = np.linspace(lo, hi, count + 2)[1:-1]
    return vf.seam_gap(ext, np.exp(1j * s), -np.exp(1j * s))


def _seam_residual_isotropic(ext, count: int = 64) -> float:
    th = np.linspace(0, math.pi, count + 2)[1:-1]
    return vf.seam_gap(ext, 1j * th, 1.0)


def _involution_residual(directive, points: np.ndarray, height_mirror: float) -> float:
    arc = directive["arc"]
    z = points[:, 0] + 1j * points[:, 1]
    zz = arc.reflect(arc.reflect(z))
    once = height_mirror - points[:, 2]
    tt = height_mirror - once
    back = np.stack([zz.real, zz.imag, tt], axis=-1)
    return float(np.max(np.abs(back - points)))


def cmd_reflect(cfg: JobConfig) -> int:
    if not cfg.reflections:
        raise ConfigError("reflections", "reflect needs at least one directive")
    surf = build_surface(cfg)
    report = _base_report(cfg, "reflect")
    report["surface"] = surf.name
    entries = []
    mesh = None
    ok = True
    current = surf
    for i, d in enumerate(cfg.reflections):
        try:
            if d["kind"] == "horizontal":
                if current.chart not in ("half-plane", "disk"):
                    raise ConfigError(f"reflections[{i}]", "horizontal reflection needs a half-plane or disk chart")
                ext = reflect_horizontal(current, d["arc"], d["height"], seam=d["seam"],
                                         tol=cfg.tolerances["boundary_height"])
                seam_res = _seam_residual_horizontal(ext, d["seam"], current.chart)
                grid = _extended_grid(current.chart, d["seam"], cfg)
                mirror_height = 2 * d["height"]
            else:
                jump = _jump_chart(current, d, cfg)
                ext = extend_isotropic(current, jump, d["arc"], tol=cfg.tolerances["boundary_height"])
                seam_res = _seam_residual_isotropic(ext)
                rmax = 1.0 if current.chart == "half-plane" else 0.5
                grid = sample_grid("blowup", cfg.resolution + (cfg.resolution + 1) % 2,
                                   [-rmax, rmax, 0.02, math.pi - 0.02], blowup=jump)
                mirror_height = jump.a + jump.b
        except (ValidationError, ReflectionError) as exc:
            raise ReflectionFailure(f"reflections[{i}]: {exc}") from None
        mesh_i = build_mesh(ext, grid)
        entry = {
            "kind": d["kind"],
            "arc": d["arc"].to_json(),
            "motion": None if ext.motion is None else ext.motion.to_json(),
            "seam_residual": seam_res,
            "harmonicity": _harmonicity_grid(ext, grid, cfg.tolerances["harmonicity"]),
            "mesh": _mesh_summary(mesh_i),
        }
        if d["repeat"] >= 2:
            inv = _involution_residual(d, mesh_i.vertices, mirror_height)
            if ext.motion is not None:
                twice = ext.motion.compose(ext.motion)
                inv = max(inv, float(np.max(np.abs(twice(mesh_i.vertices) - mesh_i.vertices))))
            entry["double_apply_residual"] = inv
            entry["double_apply_passed"] = inv <= 1e-9
            ok &= inv <= 1e-9
        ok &= entry["harmonicity"]["passed"] and seam_res <= max(cfg.tolerances["seam"], 1e-8)
        entries.append(entry)
        mesh = mesh_i
        current = ext if d["kind"] == "horizontal" else current
    report["reflections"] = entries
    report["passed"] = bool(ok)
    _write_outputs(cfg, report, mesh)
    return EXIT_OK if ok else EXIT_FAIL


class ReflectionFailure(RuntimeError):
    pass


def _extended_grid(chart, seam, cfg: JobConfig):
    """Parameter grid covering a surface and its mirror copy across ``seam``."""
    from .mesh import ParamGrid

    m = cfg.resolution
    if chart == "half-plane":
        b = _bounds(cfg)
        r = np.linspace(b[0], b[1], m)
        if seam[0] >= 0:       # mirror across the positive axis: theta in (-pi, pi)
            th = np.linspace(-b[3], b[3], 2 * m - 1)
        else:                  # negative axis: theta in (0, 2 pi)
            th = np.linspace(b[2], 2 * math.pi - b[2], 2 * m - 1)
        return ParamGrid("plane", r[:, None] * np.exp(1j * th[None, :]))
    inner = np.linspace(0.3, 1.0, m)
    rho = np.concatenate([inner, 1.0 / inner[::-1][1:]])
    lo, hi = seam if seam[1] - seam[0] < 2 * math.pi else (0.0, 2 * math.pi)
    phi = np.linspace(lo + 1e-3, hi - 1e-3, m)
    return ParamGrid("plane", rho[:, None] * np.exp(1j * phi[None, :]))


def _harmonicity_grid(surf, grid, tol) -> dict:
    rng = np.random.default_rng(0)
    P = grid.params
    i = rng.integers(1, P.shape[0] - 1, HARMONICITY_SAMPLES)
    j = rng.integers(1, P.shape[1] - 1, HARMONICITY_SAMPLES)
    u, v = rng.uniform(0, 1, HARMONICITY_SAMPLES), rng.uniform(0, 1, HARMONICITY_SAMPLES)
    params = (P[i, j] * (1 - u) * (1 - v) + P[i + 1, j] * u * (1 - v) + P[i, j + 1] * (1 - u) * v
              + P[i + 1, j + 1] * u * v)
    if grid.chart == "blowup":
        params = params[np.abs(params.real) > 1e-6]
    res = vf.harmonicity(surf, params, tol)
    return {"max_residual": res.residual, "threshold": res.threshold, "passed": res.passed,
            "samples": int(params.size)}


def cmd_tile(cfg: JobConfig) -> int:
    if cfg.preset != "schwarz-d":
        raise ConfigError("surface.preset", "tile supports the schwarz-d preset")
    result = schwarz_d_tiling(cfg.depth, cfg.n, max(2, cfg.resolution // 4))
    report = _base_report(cfg, "tile")
    report["depth"] = cfg.depth
    report["patches"] = len(result.meshes)
    report["words"] = [list(w) for w in result.words]
    report["motions"] = [m.to_json() for m in result.motions]
    report["periods"] = [list(p) for p in result.periods]
    report["period_determinant"] = result.period_determinant
    report["seam_residual"] = result.seam_residual
    ok = result.seam_residual <= cfg.tolerances["seam"]
    report["passed"] = bool(ok)
    mesh = weld(result.meshes) if cfg.out else None
    if mesh is not None:
        report["mesh"] = _mesh_summary(mesh)
    _write_outputs(cfg, report, mesh)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sc_map(cfg: JobConfig) -> int:
    chart = PolygonChart(cfg.n)
    report = _base_report(cfg, "sc-map")
    report["n"] = cfg.n
    report["radius"] = chart.radius
    report["vertices"] = [[z.real, z.imag] for z in chart.vertices]
    report["midpoints"] = [[z.real, z.imag] for z in chart.midpoints]
    suite = vf.sc_symmetry(cfg.n, tol=cfg.tolerances["sc_symmetry"])
    report["symmetry"] = suite.to_json()
    mesh = None
    if cfg.out:
        mesh, _ = schwarz_patch_mesh(cfg.n, max(2, cfg.resolution // 4))
        report["mesh"] = _mesh_summary(mesh)
    _write_outputs(cfg, report, mesh)
    return EXIT_OK if suite.passed else EXIT_FAIL


def _safe(name, fn) -> vf.SuiteResult:
    try:
        return fn()
    except (ArithmeticError, ValueError) as exc:
        return vf.SuiteResult(name, False, math.inf, 0.0, {"error": str(exc)})


def cmd_verify(cfg: JobConfig) -> int:
    tol = cfg.tolerances
    report = _base_report(cfg, "verify")
    suites = []
    data = surface_data(cfg)
    if data is not None:
        suites.append(vf.data_checks(data))
    surf = _safe("surface", lambda: build_surface(cfg))
    if isinstance(surf, vf.SuiteResult):
        suites.append(surf)
        surf = None
    bounds = _bounds(cfg)
    if surf is not None:
        params = interior_samples(cfg.chart, bounds)
        suites.append(_safe("harmonicity", lambda: vf.harmonicity(surf, params, tol["harmonicity"])))
        if surf.holomorphic:
            suites.append(_safe("conformality", lambda: vf.conformality(surf, params[:100], tol["conformality"])))
    arcs = [d["arc"] for d in cfg.reflections] or None
    suites.append(_safe("reflection-involution", lambda: vf.reflection_involution(arcs, tol=tol["involution"])))
    bd = getattr(surf, "boundary_data", None) if surf is not None else None
    if bd is None:
        bd = BoundaryData.from_jumps("half-plane", [0.0], [1.0, 0.0])
    suites.append(_safe("poisson-recovery", lambda: vf.poisson_recovery(bd, tol=tol["poisson"])))
    suites.append(_safe("sc-symmetry", lambda: vf.sc_symmetry(cfg.n, tol=tol["sc_symmetry"])))
    if data is not None and abs(data.c) == 1.0 and data.chart == "half-plane":
        ws = vf.endpoint_samples(12)
        suites.append(_safe("endpoint", lambda: vf.endpoint_equation(data, ws, tol["endpoint"])))
    report["suites"] = [s.to_json() for s in suites]
    report["passed"] = all(s.passed for s in suites)
    _write_outputs(cfg, report, None)
    return EXIT_OK if report["passed"] else EXIT_FAIL


HANDLERS = {
    "generate": cmd_generate,
    "reflect": cmd_reflect,
    "tile": cmd_tile,
    "conjugate": cmd_conjugate,
    "verify": cmd_verify,
    "sc-map": cmd_sc_map,
}

DEFAULT_PRESET = {"tile": "schwarz-d", "sc-map": "schwarz-d"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isoflect", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"isoflect {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON job configuration")
        s.add_argument("--preset", choices=PRESETS)
        s.add_argument("--n", type=int, help="polygon half vertex count (schwarz-d)")
        s.add_argument("--depth", type=int, help="tiling depth")
        s.add_argument("--out", help="mesh output path; the report goes next to it as .json")
        s.add_argument("--format", choices=("obj", "ply"))
        s.add_argument("--tol", type=float, help="quadrature tolerance")
    return p


def load_config(args) -> JobConfig:
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
        if not isinstance(doc, dict):
            raise ConfigError("", "config must be a JSON object")
    doc = merge_flags(doc, args)
    if "surface" not in doc and args.command in DEFAULT_PRESET:
        doc["surface"] = {"preset": DEFAULT_PRESET[args.command]}
    return parse_config(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReflectionFailure, MeshError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
