import csv
import json
import subprocess
import sys

import pytest

from conftest import CONFIGS, ROOT
from spousepension.cli import run
from spousepension.config import load_config, parse_config

SMALL = """
[grid]
step = 0.2
t_max = 30.0
y_max = 80.0

[intensities.gamma]
kind = "constant"
rate = 0.1

[intensities.sigma]
kind = "constant"
rate = 0.05

[intensities.q_spouse]
kind = "constant"
rate = 0.02

[intensities.phi]
kind = "uniform"
lo = 20.0
hi = 40.0

[intensities.death]
kind = "hazard"
hazard = { kind = "constant", rate = 0.04 }

[[policies]]
kind = "lifelong"
q_ad = { kind = "constant", rate = 0.02 }

[[policies]]
kind = "lump_sum"
c = 65.0
q_ad = { kind = "constant", rate = 0.02 }

[rate]
kind = "constant"
rate = 0.03

[simulation]
n_paths = 20000
seed = 5
g_times = [10.0, 20.0]
f_times = [20.0]
"""


def write(tmp_path, text, name="scenario.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_value_toy_matches_reference(tmp_path):
    out = tmp_path / "out"
    assert run(["value", "--config", str(CONFIGS / "toy.toml"), "--out", str(out), "--quiet"]) == 0
    summary = {r["policy"]: r for r in read_rows(out / "summary.csv")}
    # exact lifelong liability of the toy scenario on a 125-year horizon
    assert float(summary["lifelong"]["liability"]) == pytest.approx(6.662868069696638, rel=1e-5)
    assert set(summary) == {"lifelong", "terminating_c67", "lump_sum_c65"}
    assert (out / "cashflow_lifelong.csv").exists()
    params = json.loads((out / "params.json").read_text())
    assert parse_config(params["config"]) == load_config(CONFIGS / "toy.toml")


def test_missing_field_is_named(tmp_path, capsys):
    path = write(tmp_path, SMALL.replace("step = 0.2\n", ""))
    assert run(["solve-marital", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "grid.step" in capsys.readouterr().err


def test_bad_toml_reports_position(tmp_path, capsys):
    path = write(tmp_path, SMALL + "\n[broken\n")
    assert run(["solve-marital", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    assert "line" in capsys.readouterr().err


def test_missing_file_and_bad_flags(tmp_path):
    assert run(["value", "--config", str(tmp_path / "nope.toml")]) == 1
    assert run(["simulate", "--config", str(write(tmp_path, SMALL)), "--paths", "0",
                "--out", str(tmp_path / "o")]) == 1
    assert run(["no-such-command"]) == 1


def test_truncation_failure_exit_code(tmp_path):
    path = write(tmp_path, SMALL + "\n[truncation]\nnu_cap = 1\n")
    assert run(["solve-marital", "--config", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_comparison_failure_exit_code(tmp_path):
    path = write(tmp_path, SMALL + "\n[compare]\nz_max = 1e-6\n")
    assert run(["compare", "--config", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 3
    rows = read_rows(tmp_path / "o" / "compare.csv")
    assert {r["quantity"] for r in rows} >= {"g", "f", "liability_lifelong", "liability_lump_sum_c65"}


def test_compare_passes_on_small_scenario(tmp_path):
    path = write(tmp_path, SMALL)
    assert run(["compare", "--config", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 0


def test_g82_check(tmp_path):
    small = (CONFIGS / "g82.toml").read_text().replace("t_max = 100.0", "t_max = 50.0").replace(
        "y_max = 150.0", "y_max = 80.0").replace("step = 0.05", "step = 0.1")
    path = write(tmp_path, small)
    assert run(["g82-check", "--config", str(path), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    rows = read_rows(tmp_path / "o" / "g82_check.csv")
    assert [r["passed"] for r in rows] == ["true", "true"]
    assert (tmp_path / "o" / "g82" / "marital_g.csv").read_text().startswith("x,g,")
    assert run(["g82-check", "--config", str(write(tmp_path, SMALL)), "--out", str(tmp_path / "p")]) == 1


def test_g82_config_without_rate_cannot_be_valued(tmp_path, capsys):
    assert run(["value", "--config", str(CONFIGS / "g82.toml"), "--out", str(tmp_path / "o"),
                "--step", "0.5"]) == 1
    assert "rate" in capsys.readouterr().err


def test_reruns_are_byte_identical(tmp_path):
    path = write(tmp_path, SMALL)
    for cmd in ("solve-marital", "value", "simulate"):
        a, b = tmp_path / f"{cmd}_a", tmp_path / f"{cmd}_b"
        assert run([cmd, "--config", str(path), "--out", str(a), "--quiet"]) == 0
        assert run([cmd, "--config", str(path), "--out", str(b), "--quiet"]) == 0
        files = sorted(p.name for p in a.iterdir())
        assert files == sorted(p.name for p in b.iterdir()) and files
        for name in files:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_step_override(tmp_path):
    path = write(tmp_path, SMALL)
    assert run(["value", "--config", str(path), "--out", str(tmp_path / "o"), "--step", "0.1", "--quiet"]) == 0
    rows = read_rows(tmp_path / "o" / "cashflow_lifelong.csv")
    assert len(rows) == 301
    params = json.loads((tmp_path / "o" / "params.json").read_text())
    assert parse_config(params["config"]).grid.step == 0.1
    assert run(["value", "--config", str(path), "--out", str(tmp_path / "p"), "--step", "0.7"]) == 1


def test_module_entry_point(tmp_path):
    path = write(tmp_path, SMALL)
    proc = subprocess.run([sys.executable, "-m", "spousepension", "solve-marital", "--config", str(path),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True, cwd=ROOT)
    assert proc.returncode == 0, proc.stderr
    assert "solved" in proc.stderr
    assert (tmp_path / "o" / "marital_f.csv").exists()
