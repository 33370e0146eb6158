import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from condent import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with path.open() as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("command, config, extra", [
    ("distribution", "distribution_ad.json", ["--samples", "20000"]),
    ("distribution", "distribution_dephasing.json", ["--samples", "20000"]),
    ("mean", "mean.json", []),
    ("tau", "tau.json", []),
    ("oracle", "oracle.json", []),
    ("tomography", "tomography.json", []),
    ("verify", "verify.json", ["--suite", "universality", "--suite", "kernels"]),
])
def test_commands_succeed(tmp_path, command, config, extra):
    code, out = run(tmp_path, command, "--config", str(CONFIGS / config), *extra)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == command and manifest["passed"]
    assert manifest["outputs"]
    for name in manifest["outputs"]:
        assert (out / name).stat().st_size > 0


def test_distribution_tables(tmp_path):
    code, out = run(tmp_path, "distribution", "--config", str(CONFIGS / "distribution_ad.json"), "--samples", "20000")
    assert code == 0
    curves = rows(out / "curves.csv")
    assert len(curves) == 20
    for r in curves:
        p = float(r["p"])
        assert float(r["x_mean"]) == pytest.approx((1 - p) ** 0.5)
    surface = rows(out / "surface.csv")
    assert {"x", "mc_density", "closed_form_density"} <= set(surface[0])


def test_tau_table(tmp_path):
    code, out = run(tmp_path, "tau", "--config", str(CONFIGS / "tau.json"))
    table = rows(out / "tau.csv")
    at2 = [r for r in table if r["finite"] == "True"]
    assert at2 and all(float(r["mu"]) >= 1.0 for r in at2)
    assert any(r["finite"] == "False" for r in table)


def test_replay_is_identical(tmp_path):
    args = ["distribution", "--config", str(CONFIGS / "distribution_ad.json"), "--samples", "5000", "--seed", "7"]
    code, first = run(tmp_path, *args, name="a")
    assert code == 0
    code, second = run(tmp_path, "distribution", "--config", str(first / "manifest.json"), "--workers", "4", name="b")
    assert code == 0
    m1 = json.loads((first / "manifest.json").read_text())
    m2 = json.loads((second / "manifest.json").read_text())
    assert m1["outputs"] == m2["outputs"]
    assert m2["resolved_config"]["seed"] == 7


def test_replay_with_wrong_command(tmp_path):
    code, first = run(tmp_path, "tau", name="a")
    assert code == 0
    code, _ = run(tmp_path, "mean", "--config", str(first / "manifest.json"), name="b")
    assert code == 2


def test_json_format(tmp_path):
    code, out = run(tmp_path, "tau", "--format", "json")
    assert code == 0
    data = json.loads((out / "result.json").read_text())
    assert data["tau"]["columns"][0] == "mu"


def test_fault_injection_exits_3(tmp_path):
    code, out = run(tmp_path, "verify", "--suite", "scaling", "--f-scale", "1.01")
    assert code == 3
    table = rows(out / "verify.csv")
    assert all(r["passed"] == "False" for r in table)


@pytest.mark.parametrize("setup, needle", [
    (lambda p: None, "cannot read"),
    (lambda p: p.write_text("{\n  \"t\": 1,\n}"), ":3:1"),
    (lambda p: p.write_text("{\"t\": 1.0}"), "system"),
])
def test_bad_configs_exit_2(tmp_path, capsys, setup, needle):
    cfg = tmp_path / "cfg.json"
    setup(cfg)
    code, _ = run(tmp_path, "oracle", "--config", str(cfg))
    assert code == 2
    assert needle in capsys.readouterr().err


def test_invalid_system_reports_all_violations(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system": {"dims": [2, 2], "initial_state": [[1, 0], [0, 0], [0, 0]],
                                          "channels": [{"kind": "dephasing", "target": 5,
                                                        "params": {"delta": -1}}]}}))
    code, _ = run(tmp_path, "distribution", "--config", str(cfg))
    assert code == 2
    err = capsys.readouterr().err
    assert "delta" in err and "initial_state" in err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["tau"]) == 0
    assert (tmp_path / "env" / "tau" / "manifest.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "condent", "tau", "--out", str(tmp_path / "m")],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "m" / "tau.csv").exists()


def test_version(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--version"])
    assert "condent" in capsys.readouterr().out
