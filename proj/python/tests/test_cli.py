import json
import os
import re
import subprocess
from pathlib import Path

import numpy as np
import pytest

BIN = os.environ.get("COVWALK_BIN", "covwalk")
CONFIGS = Path(os.environ.get("COVWALK_CONFIGS", Path(__file__).resolve().parents[2] / "configs"))


def run(*args, cwd=None):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, cwd=cwd)


@pytest.mark.parametrize("preset", ["gamma2", "punctured_square_torus"])
def test_lattice_check_presets(preset):
    r = run("lattice", "check", preset)
    assert r.returncode == 0, r.stdout + r.stderr


def test_lattice_check_file():
    r = run("lattice", "check", CONFIGS / "lattices" / "gamma2_abc.lattice")
    assert r.returncode == 0, r.stdout + r.stderr


def test_lattice_check_bad_weights_names_the_relator_line():
    r = run("lattice", "check", CONFIGS / "lattices" / "gamma2_bad_weights.lattice")
    assert r.returncode == 2
    assert "line 13" in r.stdout + r.stderr


def test_walk_drift_half(tmp_path):
    r = run("walk", "run", "--config", CONFIGS / "drift_half.cfg", "--out", tmp_path)
    assert r.returncode == 0, r.stderr
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema"] == "covwalk-summary/1"
    drift = summary["reports"]["drift"]
    assert drift["target"] == [0.5]
    assert abs(drift["mean"][0] - 0.5) < 0.01
    assert drift["fraction_within"] >= 0.99
    assert re.fullmatch(r"[0-9a-f]{16}", summary["config_hash"])
    header = (tmp_path / "records.csv").read_text().splitlines()[0]
    assert header == "traj,n,k1,drift1,cusp_height,cartan_t"


def test_same_seed_same_bytes(tmp_path):
    for sub in ("a", "b"):
        r = run("walk", "run", "--config", CONFIGS / "symmetric_zero.cfg", "--out", tmp_path / sub)
        assert r.returncode == 0, r.stderr
    for name in ("records.csv", "records.jsonl", "trajectories.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_fit_cauchy_recovers_scale(tmp_path):
    rng = np.random.default_rng(7)
    samples = 1.5 + 2.0 * rng.standard_cauchy(20000)
    path = tmp_path / "synthetic_cauchy.csv"
    path.write_text("x\n" + "\n".join(str(float(v)) for v in samples) + "\n")
    r = run("fit", "cauchy", "--in", path)
    assert r.returncode == 0, r.stderr
    scale = float(re.search(r"scale (\S+)", r.stdout).group(1))
    location = float(re.search(r"location (\S+)", r.stdout).group(1))
    assert abs(scale - 2.0) <= 0.1
    assert abs(location - 1.5) <= 0.1


def test_fit_too_few_samples_is_runtime_error(tmp_path):
    path = tmp_path / "few.csv"
    path.write_text("1\n2\n3\n")
    assert run("fit", "cauchy", "--in", path).returncode == 3


def test_lyapunov_positive():
    r = run("lyapunov", "--config", CONFIGS / "gamma2_cauchy.cfg", "--steps", 500, "--trajectories", 50)
    assert r.returncode == 0, r.stderr
    lam = float(re.search(r"lambda (\S+)", r.stdout).group(1))
    assert lam > 0


def test_report_empty_dir(tmp_path):
    assert run("report", "--dir", tmp_path).returncode == 2


def test_report_collates(tmp_path):
    assert run("walk", "run", "--config", CONFIGS / "drift_half.cfg", "--out", tmp_path / "runs" / "d").returncode == 0
    r = run("report", "--dir", tmp_path / "runs")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "runs" / "dashboard.txt").exists()
    assert (tmp_path / "runs" / "dashboard_drift.dat").exists()


def test_config_error_is_line_anchored(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[lattice]\npreset = gamma2\n[walk]\nsteps = ten\n")
    r = run("walk", "run", "--config", cfg, "--out", tmp_path / "o")
    assert r.returncode == 2
    assert "line 4" in r.stderr + r.stdout
