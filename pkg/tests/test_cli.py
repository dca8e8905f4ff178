import json
import subprocess
import sys

import pytest

from etrc import pipeline
from etrc.cli import main
from etrc.scenario import PRESETS


def test_presets(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "example1" in out and "example2" in out


def test_synthesize_example1(capsys):
    assert main(["synthesize", "--scenario", "example1"]) == 0
    out = capsys.readouterr().out
    assert "K1: [-4.1623 -4.1623]" in out
    assert "lambda_min(Q1): 10" in out
    assert "mu:" in out


def test_synthesize_reports_failed_hypothesis(capsys):
    assert main(["synthesize", "--scenario", "example2"]) == 1
    out = capsys.readouterr().out
    assert "lambda_min(Q2): -102.2" in out
    assert "certificate failed" in out


def test_bounds_passthrough(capsys, example1):
    assert main(["bounds", "--scenario", "example1", "--trigger", "static"]) == 0
    out = capsys.readouterr().out
    tau = float(out.split("static_tau:")[1].split()[0])
    assert tau == pytest.approx(pipeline.inter_event_bound(example1, "static").tau, rel=1e-8)
    assert tau > 0


def test_simulate_writes_files(tmp_path, capsys):
    rc = main(["simulate", "--scenario", "example1", "--trigger", "static", "--out",
               str(tmp_path), "--horizon", "1.0"])
    assert rc == 0
    assert (tmp_path / "example1_static_trace.csv").exists()
    assert (tmp_path / "example1_static_metrics.csv").read_text().startswith("mechanism,")


def test_compare_table(tmp_path, capsys):
    rc = main(["compare", "--scenario", "example1", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "example1_compare.csv").read_text().splitlines()
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert int(rows["periodic"][4]) == 4501
    assert 60 <= int(rows["static"][4]) <= 112


def test_overrides_and_dt_flag(tmp_path, capsys):
    rc = main(["simulate", "--scenario", "example1", "--trigger", "periodic", "--dt", "1e-3",
               "--set", "trigger.period=0.01", "--horizon", "1", "--out", str(tmp_path)])
    assert rc == 0
    assert "u_total=101" in capsys.readouterr().out


def test_scenario_file(tmp_path, capsys):
    from etrc.scenario import serialize_scenario
    path = tmp_path / "ex.toml"
    path.write_text(serialize_scenario(PRESETS["example1"]))
    assert main(["synthesize", "--scenario", str(path)]) == 0


def test_errors_are_json(capsys):
    assert main(["synthesize", "--scenario", "nowhere"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "UnknownPreset"
    assert main(["synthesize", "--scenario", "example1", "--set", "trigger.sigma=3"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ValidationError" and "trigger.sigma" in err["message"]


def test_certificate_failure_exit_code(capsys):
    rc = main(["simulate", "--scenario", "example2", "--trigger", "static"])
    assert rc == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "HypothesisViolated" and err["min_eigenvalue"] < 0


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "etrc", "presets"], capture_output=True,
                         text=True, check=True).stdout
    assert "example1" in out
