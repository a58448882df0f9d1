import json
import subprocess
import sys

import pytest

from mrattrib.cli import RunConfig, run_cli
from mrattrib.exceptions import SchemaError
from mrattrib.simulation import Design1Params, simulate_design1


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "two_samples.csv"
    simulate_design1(Design1Params(n0=300, n1=300, seed=1)).to_csv(path)
    return str(path)


def test_theta_json_output(data_csv, tmp_path):
    out = tmp_path / "theta.json"
    assert run_cli(["theta", "--data", data_csv, "--change", "010", "--seed", "3", "-o", str(out)]) == 0
    d = json.loads(out.read_text())
    assert list(d) == ["change", "theta", "se", "ci_lo", "ci_hi", "level", "meta"]
    assert d["ci_lo"] < d["theta"] < d["ci_hi"] and d["change"] == "010"
    cfg = RunConfig.from_dict(d["meta"]["config"])
    assert cfg.seed == 3 and cfg.to_dict() == d["meta"]["config"]
    sidecar = json.loads((tmp_path / "theta.json.diagnostics.json").read_text())
    assert sidecar["command"] == "theta" and sidecar["plan"]["stages"] == 2


def test_theta_csv_output(data_csv, tmp_path):
    out = tmp_path / "theta.csv"
    assert run_cli(["theta", "--data", data_csv, "--change", "100", "--format", "csv", "-o", str(out)]) == 0
    header, row = out.read_text().splitlines()
    assert header == "change,theta,se,ci_lo,ci_hi" and row.startswith("100,")


def test_attribute_from_config(data_csv, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "attribute", "data_path": data_csv, "bootstrap_B": 50,
                               "regressor": {"family": "ols_poly", "degree": 2}}))
    out = tmp_path / "attr.json"
    diag = tmp_path / "diag.json"
    assert run_cli(["attribute", "--config", str(cfg), "-o", str(out), "--diagnostics", str(diag)]) == 0
    d = json.loads(out.read_text())
    assert len(d["shap"]) == 3 and len(d["path"]) == 3
    assert d["meta"]["config"]["bootstrap_B"] == 50
    assert json.loads(diag.read_text())["command"] == "attribute"


def test_simulate_is_reproducible_across_threads(tmp_path):
    outs = []
    for threads in ("1", "4", "1"):
        out = tmp_path / f"sim{len(outs)}.csv"
        assert run_cli(["simulate", "--design", "1", "--draws", "3", "--seed", "7", "--threads", threads,
                        "-o", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert outs[0].decode().startswith("target,MR,regression,reweighting\n")


def test_seed_environment_fallback(monkeypatch, tmp_path):
    monkeypatch.setenv("MRATTRIB_SEED", "17")
    out = tmp_path / "sim.json"
    assert run_cli(["simulate", "--draws", "2", "--format", "json", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["meta"]["seed"] == 17
    assert run_cli(["simulate", "--draws", "2", "--seed", "4", "--format", "json", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["meta"]["seed"] == 4


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"command": "simulate", "drawz": 3}))
    assert run_cli(["simulate", "--config", str(cfg)]) == 2
    assert "drawz" in capsys.readouterr().err


def test_bad_values_exit_2(data_csv, tmp_path):
    assert run_cli(["theta", "--data", data_csv]) == 2
    assert run_cli(["theta", "--data", data_csv, "--change", "01"]) == 2
    assert run_cli(["theta", "--data", str(tmp_path / "missing.csv"), "--change", "010"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("T,X1,Y\n0,1.0,2.0\n2,1.0,nan\n")
    assert run_cli(["theta", "--data", str(bad), "--change", "01"]) == 2
    assert run_cli(["simulate", "--threads", "0"]) == 2
    assert run_cli(["bogus"]) == 2


def test_schema_validation_messages():
    with pytest.raises(SchemaError, match="config.prob_clip"):
        RunConfig(command="simulate", prob_clip=0.7)
    with pytest.raises(SchemaError, match="config.weight_bounds"):
        RunConfig(command="simulate", weight_bounds=(2.0, 1.0))
    with pytest.raises(SchemaError, match="config.regressor"):
        RunConfig(command="simulate", regressor={"family": "forest"})


def test_console_entry_point(tmp_path):
    out = tmp_path / "sim.csv"
    proc = subprocess.run([sys.executable, "-m", "mrattrib.cli", "simulate", "--draws", "2", "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().count("\n") == 10
