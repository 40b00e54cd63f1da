from __future__ import annotations

import json

import pytest

from ternage import suites
from ternage.cli import main
from ternage.constructions import build_H_n, catalog
from ternage.structure import FinStructure


def _write(tmp_path, name, data):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


# --- reports ---------------------------------------------------------------------

def test_suite_registry():
    assert sorted(c.criterion for c in suites.CHECKS) == list(range(1, 16))
    assert suites.SUITES["all"] == list(range(1, 16))
    with pytest.raises(KeyError):
        suites.get_suite("lemma-9.9")


def test_emit_report_empty_and_statuses():
    assert suites.overall_status([]) == "pass"
    text = suites.emit_report([], "json")
    data = json.loads(text)
    assert data["schema"] == suites.SCHEMA and data["checks"] == [] and data["status"] == "pass"
    ok = suites.CheckResult(1, "x", "t", True, "pass")
    bad = suites.CheckResult(2, "y", "t", True, "fail", {"why": 1})
    cut = suites.CheckResult(3, "z", "t", False, "truncated", verified_bound=4)
    assert suites.overall_status([ok, cut]) == "truncated"
    assert suites.overall_status([ok, cut, bad]) == "fail"
    lines = suites.emit_report([ok, bad, cut], "text").splitlines()
    assert lines[1].startswith("[PASS") and lines[2].startswith("[FAIL")
    assert "verified to 4" in lines[3]
    assert json.loads(suites.emit_report([cut]))["checks"][0]["kind"] == "evidence"
    with pytest.raises(ValueError):
        suites.emit_report([ok], "yaml")


def test_suite_reports_are_deterministic():
    a = suites.emit_report(suites.run_suite("lemma-7.1", seed=3))
    b = suites.emit_report(suites.run_suite("lemma-7.1", seed=3))
    assert a == b
    assert json.loads(a)["status"] == "pass"


def test_budget_truncation_is_reported():
    rep = suites.run_suite("parity-age", seed=1, nodes=50)
    assert [r.status for r in rep.results] == ["pass", "truncated"]
    assert rep.status == "truncated"


# --- CLI ---------------------------------------------------------------------

def test_cli_structure_inspect_and_canon(tmp_path, capsys):
    f = _write(tmp_path, "h3.json", build_H_n(3).to_json())
    assert main(["structure", "inspect", f, "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["size"] == 4 and data["cells"] == [[0], [1, 2, 3]]
    assert main(["structure", "canon", f]) == 0
    assert "canonical" in json.loads(capsys.readouterr().out)


def test_cli_age_commands(tmp_path, capsys):
    assert main(["age", "constraints", "--builtin", "parity", "--max-size", "4"]) == 0
    assert "2 constraints up to 4" in capsys.readouterr().out
    assert main(["age", "amalgamation", "--builtin", "parity", "--kind", "free", "--max-size", "4"]) == 1
    capsys.readouterr()
    assert main(["age", "random", "--builtin", "F(K4)", "--max-size", "4", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["random"] is False
    f = _write(tmp_path, "k4.json", catalog("K4").to_json())
    assert main(["age", "permitted", "--builtin", "F(K4)", "--structure", f]) == 0
    assert capsys.readouterr().out.strip() == "forbidden"
    age = {"name": "mine", "signature": catalog("K4").to_json()["signature"],
           "forbidden": [catalog("K4").to_json()]}
    af = _write(tmp_path, "age.json", age)
    assert main(["age", "constraints", "--age", af, "--max-size", "5"]) == 0
    assert "1 constraints" in capsys.readouterr().out


def test_cli_budget_exit_code(capsys):
    code = main(["age", "constraints", "--builtin", "tournament-reduct", "--max-size", "5",
                 "--budget-nodes", "20", "--format", "json"])
    assert code == 2
    assert json.loads(capsys.readouterr().out)["truncated"] is True


def test_cli_env_overrides(monkeypatch, capsys):
    monkeypatch.setenv("TERNAGE_FORMAT", "json")
    assert main(["age", "random", "--builtin", "F(K4)", "--max-size", "4"]) == 0
    json.loads(capsys.readouterr().out)
    monkeypatch.setenv("TERNAGE_SEED", "abc")
    assert main(["verify", "lemma-7.1"]) == 64


def test_cli_generic_grow_and_check(tmp_path, capsys):
    out = str(tmp_path / "g.json")
    log = str(tmp_path / "g.log.json")
    assert main(["generic", "grow", "--builtin", "graphs", "--steps", "30", "--seed", "2",
                 "--out", out, "--log", log]) == 0
    capsys.readouterr()
    assert json.loads(open(log).read())["seed"] == 2
    assert main(["generic", "check", "--approx", out, "--demand-size", "1", "--min-ratio", "0.5"]) == 0
    assert "demand size 1" in capsys.readouterr().out
    assert main(["generic", "check"]) == 64


def test_cli_examples_isolation_eqrel(tmp_path, capsys):
    f = str(tmp_path / "h.json")
    assert main(["examples", "build", "h_n", "--n", "4", "--out", f]) == 0
    capsys.readouterr()
    assert FinStructure.from_json(json.loads(open(f).read())) == build_H_n(4)
    c = _write(tmp_path, "c1.json", catalog("C1").to_json())
    assert main(["isolation", "--constraint", c, "--builtin", "parity"]) == 0
    assert capsys.readouterr().out.strip() == "isolated"
    t = str(tmp_path / "t.json")
    assert main(["examples", "build", "tournament-reduct", "--size", "12", "--out", t]) == 0
    capsys.readouterr()
    assert main(["eqrel", "--approx", t, "--params", "0", "--type-of", "1"]) == 0
    assert "finite evidence" in capsys.readouterr().out
    assert main(["eqrel", "--approx", t, "--params", "x"]) == 64


def test_cli_verify(tmp_path, capsys):
    assert main(["verify", "--list"]) == 0
    assert "lemma-7.1" in capsys.readouterr().out
    out = str(tmp_path / "r.json")
    assert main(["verify", "lemma-7.1", "--seed", "1", "--out", out]) == 0
    assert "[PASS" in capsys.readouterr().out
    assert json.loads(open(out).read())["status"] == "pass"
    assert main(["verify", "no-such-suite"]) == 64


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["frobnicate"]) == 64
    assert main(["--help"]) == 0
    assert main(["structure", "inspect", str(tmp_path / "missing.json")]) == 64
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["structure", "inspect", str(bad)]) == 64
    assert main(["age", "constraints"]) == 64
    capsys.readouterr()


def test_module_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "ternage", "verify", "--list"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "determinism" in out.stdout
