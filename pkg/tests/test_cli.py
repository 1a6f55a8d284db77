import json
import math
import os
import subprocess
import sys

import pytest

from cusplab.cli import RunConfig, UsageError, dumps17, parse_config, run

SWEEP_ARGS = ["--eps-min", "0.05", "--eps-max", "0.06", "--per-decade", "20", "--count", "4", "--h", "0.1",
              "--jobs", "1"]


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_predict_threshold(capsys):
    code, out, _ = _run(capsys, "predict", "--a", "1", "--n", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["lambda_dagger"] == 0.25


def test_predict_with_lambda_flat(capsys):
    code, out, _ = _run(capsys, "predict", "--lambda-flat", "1.25", "--theta", "0")
    doc = json.loads(out)
    assert code == 0 and doc["tau0"] == 1.0
    assert doc["epsilon_sequence"][0] == pytest.approx(math.exp(-math.pi / 2))


def test_reduced_closed_form(capsys, tmp_path):
    code, out, _ = _run(capsys, "reduced", "--eps", "0.0432", "--d", "1", "--count", "3", "--out", str(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "epsilon,k,Lambda,lambda" and len(lines) == 4
    assert float(lines[1].split(",")[2]) == pytest.approx(1.25, abs=2e-3)
    assert (tmp_path / "reduced.csv").read_text() == out


def test_reduced_neumann_left_end(capsys, tmp_path):
    code, out, _ = _run(capsys, "reduced", "--eps", "0.01", "--left-end", "neumann", "--count", "2",
                        "--grid-points", "2000", "--out", str(tmp_path))
    assert code == 0 and len(out.splitlines()) == 3


def test_solve_writes_spectrum(capsys, tmp_path):
    code, out, _ = _run(capsys, "solve", "--eps", "0.05", "--h", "0.1", "--count", "3", "--out", str(tmp_path))
    assert code == 0
    vals = [float(v) for v in out.split()]
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert doc["eigenvalues"] == vals and os.path.exists(doc["mesh_file"])


def test_numbers_round_trip_17_digits():
    x = 0.1 + 0.2
    text = dumps17({"x": x, "y": [1.0 / 3.0], "z": None, "s": "a"})
    doc = json.loads(text)
    assert doc["x"] == x and doc["y"][0] == 1.0 / 3.0 and doc["z"] is None


def test_layer(capsys, tmp_path):
    code, out, _ = _run(capsys, "layer", "--n-modes", "50", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads(out)
    assert doc["decay_rate"] == pytest.approx(math.pi / 2)
    assert (tmp_path / "layer_modes.csv").read_text().startswith("k,frequency,amplitude")
    assert (tmp_path / "layer_grid.csv").exists()


def test_scatter(capsys, tmp_path):
    code, out, _ = _run(capsys, "scatter", "--h", "0.05", "--delta", "0.002", "--lambda-min", "1.0",
                        "--lambda-max", "2.0", "--lambda-points", "2", "--out", str(tmp_path))
    assert code == 0
    rows = out.splitlines()
    assert rows[0] == "lambda,theta,modulus,residual" and len(rows) == 3
    assert all(abs(float(r.split(",")[2]) - 1) < 0.1 for r in rows[1:])


def test_sweep_then_report_identical(capsys, tmp_path):
    out = tmp_path / "run"
    code, first, _ = _run(capsys, "sweep", *SWEEP_ARGS, "--out", str(out))
    assert code == 0
    names = ["branches.csv", "gliding.csv", "report.json", "branches.svg"]
    before = {n: (out / n).read_bytes() for n in names}
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["h"] == 0.1 and cfg["count"] == 4
    for n in names:
        (out / n).unlink()
    code, second, _ = _run(capsys, "report", "--out", str(out))
    assert code == 0 and second == first
    assert {n: (out / n).read_bytes() for n in names} == before


def test_env_overrides_out(capsys, tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("CUSPLAB_OUT", str(target))
    code, _, _ = _run(capsys, "reduced", "--eps", "0.01", "--count", "2", "--out", str(tmp_path / "flag"))
    assert code == 0
    assert (target / "reduced.csv").exists() and not (tmp_path / "flag").exists()


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"a": 0.5, "count": 7, "window": [0.01, 0.1]}))
    cmd, cfg = parse_config(["predict", "--config", str(path), "--count", "3"])
    assert cmd == "predict" and cfg.a == 0.5 and cfg.count == 3 and cfg.window == (0.01, 0.1)


def test_config_round_trip():
    cfg = RunConfig(a=0.3, eps=1e-3 / 3, window=(0.01, 0.2), lambda_flat=0.1 + 0.2, jobs=2)
    back = RunConfig.from_dict(json.loads(cfg.to_json()))
    assert back == cfg
    assert back.to_json() == cfg.to_json()


def test_unknown_keys_rejected(tmp_path, capsys):
    with pytest.raises(UsageError):
        RunConfig.from_dict({"a": 1.0, "colour": "red"})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"bogus": 1}))
    code, _, err = _run(capsys, "predict", "--config", str(path))
    assert code == 1 and "bogus" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["predict", "--a", "abc"],
    ["predict", "--a", "-1"],
    ["solve"],
    ["solve", "--eps", "0.5"],
    ["reduced"],
    ["predict", "--lambda-flat", "0.1"],
    ["sweep", "--eps-min", "1e-5", "--h", "0.1"],
])
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1 and err


def test_numeric_failure_exit_code(capsys, tmp_path):
    code, _, err = _run(capsys, "scatter", "--h", "0.05", "--delta", "0.002", "--lambda-min", "1.0",
                        "--lambda-max", "1.0", "--lambda-points", "1", "--method", "two_solve",
                        "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"] == "ScatteringError"


def test_io_error_exit_code(capsys, tmp_path):
    code, _, _ = _run(capsys, "report", "--out", str(tmp_path / "missing"))
    assert code == 3
    code, _, _ = _run(capsys, "predict", "--config", str(tmp_path / "nope.json"))
    assert code == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cusplab", "predict"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["lambda_dagger"] == 0.25
    proc = subprocess.run([sys.executable, "-m", "cusplab", "nope"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 1
