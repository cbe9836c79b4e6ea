import json
import subprocess
import sys

import pytest

from anchorex.cli import run

BASIS = {"family": "legendre_affine", "d": 5, "omega": [-1, 0.5]}
OMEGA = {"kind": "interval", "bounds": [-1, 0.5], "resolution": 801}
XI = {"kind": "interval", "bounds": [0.5, 1], "resolution": 401}


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def cfg(tmp_path):
    return write(tmp_path / "cfg.json", {
        "basis": BASIS, "omega": OMEGA, "xi": XI, "rho": 0.7, "n": 3000, "m": 4, "M": 3, "seed": 2,
        "samples": {"truth": [1, 0.5, 0.25, 0.125, 0.0625], "n": 60, "noise": {"sigma": 0.01}},
        "method": "ridge", "alpha": 1e-3,
    })


def load(path):
    return json.loads(path.read_text())


def test_certify(cfg, tmp_path):
    assert run(["certify", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rep = load(tmp_path / "o" / "certification.json")
    assert rep["kappa_spec"] <= rep["kappa"]
    assert {"kappa", "kappa_spec", "kappa_r", "condition_flag_r", "spectrum"} <= set(rep)
    assert (tmp_path / "o" / "certification.csv").exists()


def test_fit_anchors_project_pipeline(cfg, tmp_path):
    out = tmp_path / "o"
    assert run(["fit", "--config", cfg, "--out", str(out)]) == 0
    assert load(out / "fit.json")["method"] == "ridge"
    assert run(["anchors", "--config", cfg, "--out", str(out)]) == 0
    anchors = load(out / "anchors.json")
    assert len(anchors) == 3 and all({"coeffs", "delta", "provenance"} <= set(a) for a in anchors)
    pcfg = write(tmp_path / "p.json", {"basis": BASIS, "xi": XI, "fit": "o/fit.json", "anchors": "o/anchors.json"})
    assert run(["project", "--config", pcfg, "--out", str(out)]) == 0
    pr = load(out / "projection.json")
    assert pr["converged"] and len(pr["h"]) == 5


def test_fit_from_csv(tmp_path):
    (tmp_path / "s.csv").write_text("x,value\n-1,1\n-0.5,0.5\n0,0\n0.5,-0.5\n")
    c = write(tmp_path / "c.json", {"basis": {"family": "legendre_affine", "d": 2}, "omega": OMEGA,
                                     "samples": "s.csv"})
    assert run(["fit", "--config", c, "--out", str(tmp_path / "o")]) == 0
    assert load(tmp_path / "o" / "fit.json")["coeffs"] == pytest.approx([0, -1], abs=1e-12)


def test_prob_radius_seed_override(cfg, tmp_path):
    assert run(["prob-radius", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
    assert run(["prob-radius", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "5"]) == 0
    a, b = (tmp_path / "a" / "prob_radius.json").read_bytes(), (tmp_path / "b" / "prob_radius.json").read_bytes()
    assert a == b
    rep = json.loads(a)
    assert rep["seed"] == 5 and rep["kappa_rho"] == rep["kappa_rho_mc"] and rep["default_flavor"] == "mc"


def test_experiment(tmp_path):
    c = write(tmp_path / "e.json", {"sizes": [3], "cutoffs": [0.0, 0.5]})
    assert run(["experiment", "bound_sweep", "--config", c, "--out", str(tmp_path / "x")]) == 0
    assert len(load(tmp_path / "x" / "report.json")["rows"]) == 4


def test_experiment_without_config_and_seed(tmp_path):
    assert run(["experiment", "oscillator", "--out", str(tmp_path / "x"), "--seed", "7"]) == 0
    assert load(tmp_path / "x" / "report.json")["seed"] == 7


@pytest.mark.parametrize("cfg_obj", [
    {"basis": BASIS, "omega": OMEGA},                                   # missing xi
    {"basis": {"family": "nope"}, "omega": OMEGA, "xi": XI},
    {"basis": BASIS, "omega": {"kind": "interval", "bounds": [0, -1]}, "xi": XI},
    {"basis": BASIS, "omega": OMEGA, "xi": {"kind": "interval", "bounds": [0, 1]}},  # overlap
])
def test_validation_exit_code(tmp_path, cfg_obj, capsys):
    c = write(tmp_path / "bad.json", cfg_obj)
    assert run(["certify", "--config", c, "--out", str(tmp_path / "o")]) == 2
    assert "invalid input" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run(["fit", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_unknown_experiment_key(tmp_path):
    c = write(tmp_path / "e.json", {"bogus": 1})
    assert run(["experiment", "oscillator", "--config", c, "--out", str(tmp_path)]) == 2


def test_numerical_exit_code(tmp_path):
    write(tmp_path / "fit.json", {"coeffs": [0, 3]})
    write(tmp_path / "anchors.json", [{"coeffs": [0, 0], "delta": 0.1}, {"coeffs": [0, 2], "delta": 0.1}])
    c = write(tmp_path / "p.json", {"basis": {"family": "legendre_affine", "d": 2},
                                     "xi": {"kind": "interval", "bounds": [0, 1], "resolution": 101},
                                     "fit": "fit.json", "anchors": "anchors.json", "max_iter": 50})
    assert run(["project", "--config", c, "--out", str(tmp_path / "o")]) == 3


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "anchorex", "experiment", "bound_sweep", "--out", str(tmp_path),
                           "--config", write(tmp_path / "e.json", {"sizes": [2], "cutoffs": [0.1]})],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "anchorex", "certify", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
