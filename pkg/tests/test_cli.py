import json
import os
import subprocess
import sys

import pytest

from lavlab.cli import (
    EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, EXIT_VIOLATED, _EXAMPLES, main, resolve,
)

FAST = ["--n-x", "5", "--n-t", "3"]


def test_catalog(capsys):
    assert main(["catalog"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 10
    assert main(["catalog", "--json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert {"mania", "ball_mizel", "double_phase"} <= {d["name"] for d in data}


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["check"]) == EXIT_USAGE
    assert main(["check", "--problem", "nope"]) == EXIT_USAGE
    assert main(["check", "--problem", "mania", "--eps-grid", "a,b"]) == EXIT_USAGE
    assert main(["approx", "--target", "power:-1"]) == EXIT_USAGE
    assert main(["catalog", "--threads", "0"]) == EXIT_USAGE


def test_check_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    rc = main(["check", "--problem", "mania", "--condition", "hiso", "--expect", "satisfied",
               "--eps-grid", "0.5,0.25,0.125", "--out", str(out)] + FAST)
    assert rc == EXIT_VIOLATED
    data = json.loads(out.read_text())
    assert data["verdict"] == "VIOLATED" and data["seed"] == 0 and "tool_version" in data
    rc = main(["check", "--problem", "quadratic", "--eps-grid", "0.5", "--strict"] + FAST)
    assert rc == EXIT_INCONCLUSIVE
    rc = main(["check", "--problem", "quadratic", "--eps-grid", "0.5,0.25,0.125,0.0625"] + FAST)
    assert rc == EXIT_OK
    assert "SATISFIED" in capsys.readouterr().out


def test_runtime_error_exit(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("x")
    rc = main(["gap", "--problem", "quadratic", "--levels", "4,8", "--out", str(blocker / "d")])
    assert rc == EXIT_ERROR
    assert main(["demo", "--problem", "mania"]) == EXIT_ERROR


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "mania", "k2": 3.0, "eps-grid": [0.5, 0.25]}))
    opts = resolve(["check", "--config", str(cfg)])
    assert opts["problem"] == "mania" and opts["k2"] == 3.0 and opts["eps_grid"] == [0.5, 0.25]
    assert opts["k1"] == 2.0
    opts = resolve(["check", "--config", str(cfg), "--k2", "5"])
    assert opts["k2"] == 5.0


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"problem": "mania", "colour": "red"}))
    assert main(["check", "--config", str(bad)]) == EXIT_USAGE
    assert "colour" in capsys.readouterr().err
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"command": "gap"}))
    assert main(["check", "--config", str(wrong)]) == EXIT_USAGE
    assert main(["check", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("LAVLAB_SEED", "17")
    assert resolve(["catalog"])["seed"] == 17
    assert resolve(["catalog", "--seed", "3"])["seed"] == 3
    monkeypatch.setenv("LAVLAB_SEED", "x")
    assert main(["catalog"]) == EXIT_USAGE
    monkeypatch.delenv("LAVLAB_SEED")
    assert resolve(["catalog"])["seed"] == 0


@pytest.mark.parametrize("cmd", sorted(_EXAMPLES))
def test_help_has_example(cmd, capsys):
    assert main([cmd, "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "example:" in out and _EXAMPLES[cmd] in out


def test_envelope_and_approx_outputs(tmp_path, capsys):
    env = tmp_path / "env.csv"
    assert main(["envelope", "--problem", "double_phase", "--n-grid", "33", "--ball-samples", "33",
                 "--out", str(env)]) == EXIT_OK
    lines = env.read_text().splitlines()
    assert lines[0] == "s,f_ball_inf,envelope" and len(lines) >= 34
    d = tmp_path / "approx"
    assert main(["approx", "--problem", "quadratic", "--target", "linear", "--n-max", "3",
                 "--mesh", "uniform:64", "--out", str(d)]) == EXIT_OK
    assert sorted(os.listdir(d)) == ["approximant.csv", "table.csv", "table.json"]
    assert json.loads((d / "table.json").read_text())["problem"] == "quadratic"


def test_gap_writes_reports(tmp_path):
    d = tmp_path / "g"
    assert main(["gap", "--problem", "quadratic", "--levels", "4,8", "--out", str(d)]) == EXIT_OK
    idx = json.loads((d / "index.json").read_text())
    assert idx["reports"][0]["verdict"] == "NO_GAP"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lavlab", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("lavlab ")
