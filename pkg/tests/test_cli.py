import json
import subprocess
import sys

import pytest

from isoflect.cli import (
    EXIT_CONFIG, EXIT_FAIL, EXIT_OK, ConfigError, JobConfig, main, parse_config,
)
from isoflect.mesh import read_obj, read_ply


def run(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    code = main(argv)
    out = capsys.readouterr()
    return code, out


def write_config(tmp_path, doc):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_parse_config_defaults():
    cfg = parse_config({"surface": {"preset": "helicoid"}})
    assert isinstance(cfg, JobConfig)
    assert cfg.resolution == 32 and cfg.n == 2 and cfg.c == 0
    assert cfg.chart == "half-plane"
    assert cfg.tolerances["quadrature"] == 1e-10


@pytest.mark.parametrize("doc, field", [
    ({"surface": {"preset": "helicoid"}, "resolution": 1}, "resolution"),
    ({"surface": {"preset": "helicoid"}, "colour": 1}, "colour"),
    ({"surface": {"preset": "helicoid", "weierstrass": {"F": "1", "G": "w"}}}, "surface"),
    ({"surface": {"weierstrass": {"F": "1 +", "G": "w"}}}, "surface.weierstrass.F"),
    ({"surface": {"preset": "helicoid"}, "tolerances": {"seam": -1}}, "tolerances.seam"),
    ({"surface": {"preset": "helicoid"}, "reflections": [{"kind": "horizontal", "height": 0,
                                                          "arc": {"kind": "spiral"}}]},
     "reflections[0].arc"),
    ({}, "surface"),
])
def test_config_errors_name_field(doc, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(doc)
    assert field in str(exc.value)


def test_invalid_resolution_exit_code(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {"surface": {"preset": "helicoid"}, "resolution": 1})
    code, out = run(["generate", "--config", cfg], tmp_path, monkeypatch, capsys)
    assert code == EXIT_CONFIG
    assert "resolution" in out.err


def test_missing_config_file(tmp_path, monkeypatch, capsys):
    code, out = run(["generate", "--config", "nope.json"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_CONFIG


def test_generate_helicoid(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {"surface": {"preset": "helicoid"}, "resolution": 12})
    code, out = run(["generate", "--config", cfg, "--out", "h.obj"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "h.json").read_text())
    assert report == json.loads(out.out)
    assert report["closed_form_residual"] <= 1e-8
    assert report["harmonicity"]["passed"]
    assert report["singular_points"] == []
    assert report["mesh"]["vertices"] == 144
    mesh = read_obj(tmp_path / "h.obj")
    assert mesh.n_vertices == 144 and mesh.n_triangles == 2 * 11 * 11
    assert len(report["config_hash"]) == 64


def test_generate_helicoid_euclidean_member(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {"surface": {"preset": "helicoid"}, "c": 1, "resolution": 8})
    code, _ = run(["generate", "--config", cfg, "--out", "h1.ply"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    report = json.loads((tmp_path / "h1.json").read_text())
    assert report["harmonicity"]["passed"]
    assert read_ply(tmp_path / "h1.ply").n_vertices == 64


def test_generate_weierstrass_singular_points(tmp_path, monkeypatch, capsys):
    doc = {"surface": {"weierstrass": {"F": "w^2 - 1/4", "G": "1", "chart": "disk"}},
           "resolution": 6}
    code, out = run(["generate", "--config", write_config(tmp_path, doc)], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    pts = sorted(p[0] for p in json.loads(out.out)["singular_points"])
    assert pts == pytest.approx([-0.5, 0.5], abs=1e-8)


def test_flag_overrides_change_hash(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {"surface": {"preset": "helicoid"}, "resolution": 4})
    _, a = run(["generate", "--config", cfg], tmp_path, monkeypatch, capsys)
    _, b = run(["generate", "--config", cfg, "--tol", "1e-9"], tmp_path, monkeypatch, capsys)
    ra, rb = json.loads(a.out), json.loads(b.out)
    assert ra["config_hash"] != rb["config_hash"]
    assert rb["tolerances"]["quadrature"] == 1e-9


def test_conjugate_helicoid(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path, {"surface": {"preset": "helicoid"}, "resolution": 6})
    code, out = run(["conjugate", "--config", cfg], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    assert json.loads(out.out)["harmonicity"]["passed"]


def test_reflect_helicoid(tmp_path, monkeypatch, capsys):
    doc = {"surface": {"preset": "helicoid"}, "resolution": 8, "reflections": [
        {"kind": "isotropic", "jump": 0, "a": 1, "b": 0,
         "arc": {"kind": "line", "point": [0, 0], "direction": [1, 0]}, "repeat": 2},
        {"kind": "horizontal", "height": 0, "seam": [0, None],
         "arc": {"kind": "line", "point": [0, 0], "direction": [1, 0]}, "repeat": 2},
    ]}
    code, out = run(["reflect", "--config", write_config(tmp_path, doc), "--out", "r.obj"],
                    tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    report = json.loads(out.out)
    assert report["passed"]
    for entry in report["reflections"]:
        assert entry["seam_residual"] <= 1e-8
        assert entry["harmonicity"]["passed"]
    assert (tmp_path / "r.obj").exists()


def test_reflect_rejects_wrong_plane_height(tmp_path, monkeypatch, capsys):
    doc = {"surface": {"preset": "helicoid"}, "resolution": 6, "reflections": [
        {"kind": "horizontal", "height": 0.25, "seam": [0, None]}]}
    code, _ = run(["reflect", "--config", write_config(tmp_path, doc)], tmp_path, monkeypatch, capsys)
    assert code == EXIT_FAIL


def test_tile_depths(tmp_path, monkeypatch, capsys):
    code, out = run(["tile", "--depth", "0"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK and json.loads(out.out)["patches"] == 1
    code, out = run(["tile", "--depth", "1", "--out", "t.obj"], tmp_path, monkeypatch, capsys)
    report = json.loads(out.out)
    assert code == EXIT_OK and report["patches"] == 9
    assert report["seam_residual"] <= 1e-8


def test_sc_map_command(tmp_path, monkeypatch, capsys):
    code, out = run(["sc-map", "--n", "3"], tmp_path, monkeypatch, capsys)
    report = json.loads(out.out)
    assert code == EXIT_OK
    assert report["radius"] == pytest.approx(1.1129126745223054, abs=1e-11)
    assert len(report["vertices"]) == 6


def test_verify_helicoid_passes(tmp_path, monkeypatch, capsys):
    code, out = run(["verify", "--preset", "helicoid"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    assert all(s["passed"] for s in json.loads(out.out)["suites"])


def test_verify_corrupted_data_fails(tmp_path, monkeypatch, capsys):
    doc = {"surface": {"weierstrass": {"F": "conj(w)", "G": "w"}}}
    code, out = run(["verify", "--config", write_config(tmp_path, doc)], tmp_path, monkeypatch, capsys)
    assert code == EXIT_FAIL
    suites = {s["suite"]: s for s in json.loads(out.out)["suites"]}
    assert not suites["data"]["passed"]


def test_verify_schwarz_d(tmp_path, monkeypatch, capsys):
    code, out = run(["verify", "--preset", "schwarz-d"], tmp_path, monkeypatch, capsys)
    assert code == EXIT_OK
    suites = {s["suite"]: s for s in json.loads(out.out)["suites"]}
    assert suites["sc-symmetry"]["residual"] <= 1e-8


def test_verify_endpoint_suite(tmp_path, monkeypatch, capsys):
    doc = {"surface": {"weierstrass": {"F": "1/w^2", "G": "w", "singularities": [[0, 0]]}}, "c": -1}
    code, out = run(["verify", "--config", write_config(tmp_path, doc)], tmp_path, monkeypatch, capsys)
    suites = {s["suite"]: s for s in json.loads(out.out)["suites"]}
    assert code == EXIT_OK
    assert any(name.startswith("endpoint") for name in suites)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "isoflect.cli", "sc-map", "--n", "2"],
                          capture_output=True, text=True, cwd=tmp_path, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["radius"] == pytest.approx(1.3110287771460599, abs=1e-11)
