"""Command-line interface: exit codes, output formats, determinism."""

import json
import subprocess
import sys

import pytest

from asprod.cli import main

from conftest import CORPUS_TEXT


@pytest.fixture()
def corpus_file(tmp_path):
    path = tmp_path / "corpus.defs"
    path.write_text("\n".join(CORPUS_TEXT.values()) + "\n")
    return str(path)


def write(tmp_path, text, name="defs.defs"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_check_exit_codes(tmp_path, capsys):
    asp = write(tmp_path, "stream s = a : s\n", "asp.defs")
    assert main(["check", asp, "--no-tier3"]) == 0
    not_asp = write(tmp_path, "stream s = s\n", "na.defs")
    assert main(["check", not_asp, "--no-tier3"]) == 1
    unknown = write(
        tmp_path,
        "stream u = (a : u) (+ 1/2) tail(tail(tail((a : b : u) (+ 1/2) c : d : u)))\n",
        "unk.defs",
    )
    assert main(["check", unknown, "--no-tier3"]) == 2
    capsys.readouterr()


def test_check_drift_verdict_lines(tmp_path, capsys):
    path = write(
        tmp_path,
        "stream s34 = (a : s34) (+ 3/4) tail(s34)\nstream srec = srec\n",
    )
    code = main(["check", path, "--no-tier3"])
    out = capsys.readouterr().out
    assert code == 1
    assert "s34: ASP" in out and "tier 1" in out
    assert "srec: NotASP" in out


def test_check_malformed_file_exits_3(tmp_path, capsys):
    path = write(tmp_path, "stream s = (a : s) (+ 5/4) s\n")
    code = main(["check", path])
    err = capsys.readouterr().err
    assert code == 3
    assert "probability out of range" in err
    assert ":1:" in err  # line/column diagnostics


def test_check_partial_results_on_mixed_input(tmp_path, capsys):
    good = write(tmp_path, "stream s = a : s\n", "good.defs")
    bad = write(tmp_path, "stream t = mk(x, t, t)\n", "bad.defs")  # mixed kind
    code = main(["check", good, bad, "--no-tier3"])
    captured = capsys.readouterr()
    assert code == 3
    assert "s: ASP" in captured.out  # valid definitions still analyzed
    assert "mixed-kind" in captured.err


def test_check_json_is_deterministic(corpus_file, capsys):
    assert main(["check", corpus_file, "--no-tier3", "--json"]) == 1
    first = capsys.readouterr().out
    assert main(["check", corpus_file, "--no-tier3", "--json"]) == 1
    second = capsys.readouterr().out
    assert first == second
    doc = json.loads(first)
    names = [entry["name"] for entry in doc["definitions"]]
    assert names == list(CORPUS_TEXT)  # report order matches input order
    by_name = {e["name"]: e for e in doc["definitions"]}
    assert by_name["s14"]["verdict"] == "not_asp"
    assert by_name["s14"]["measure"] == "-1/2"
    assert by_name["t2"]["tier2"]["verdict"] == "almost_sure"
    assert by_name["srec"]["tier2"]["chain"]["output_nodes"] == []


def test_check_jobs_preserves_order(corpus_file, capsys):
    assert main(["check", corpus_file, "--no-tier3", "--json", "--jobs", "4"]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in doc["definitions"]] == list(CORPUS_TEXT)


def test_measure_output(tmp_path, capsys):
    path = write(
        tmp_path,
        "tree e1 = left(e1) (+ 1/4) mk(x, e1, e1)\n"
        "tree e2 = left(e2) (+ 1/4) mk(x, e2, left(e2))\n",
    )
    assert main(["measure", path]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["e1 1/2", "e2 -1/4"]


def test_simulate_reports(tmp_path, capsys):
    path = write(tmp_path, "stream s = s\n")
    code = main(["simulate", path, "--mc-runs", "10", "--mc-horizon", "200"])
    out = capsys.readouterr().out
    assert code == 0
    assert "tail_silence=1.0000" in out
    assert "hint=evidence_against_asp" in out


def test_simulate_json_deterministic(tmp_path, capsys):
    path = write(tmp_path, "stream s = (a : s) (+ 3/4) tail(s)\n")
    args = ["simulate", path, "--mc-runs", "20", "--mc-horizon", "400", "--json"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert first == capsys.readouterr().out
    doc = json.loads(first)
    assert doc["simulations"][0]["hint"] == "no_evidence_against_asp"


def test_ppda_json_export(tmp_path, capsys):
    path = write(tmp_path, "stream s = s\n")
    assert main(["ppda", path]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"s"}
    assert len(doc["s"]["states"]) == 1
    assert len(doc["s"]["transitions"]) == 2


def test_ppda_graphviz_export(tmp_path, capsys):
    path = write(tmp_path, "stream s = a : s\n")
    assert main(["ppda", path, "--format", "graphviz"]) == 0
    out = capsys.readouterr().out
    assert "⊥ / ε : 1" in out


def test_solve_prints_values_and_classes(tmp_path, capsys):
    path = write(tmp_path, "stream s = (a : s) (+ 1/4) tail(s)\n")
    assert main(["solve", path]) == 0
    out = capsys.readouterr().out
    assert "[s, tl, s] kleene=0.333333" in out
    assert "SubReturn (certificate sum" in out
    assert "AlmostSureReturn" in out


def test_console_entry_point(tmp_path):
    path = write(tmp_path, "stream s = a : s\n")
    proc = subprocess.run(
        [sys.executable, "-m", "asprod", "check", str(path), "--no-tier3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "s: ASP" in proc.stdout


def test_smt_solver_env_var_is_consulted(tmp_path, capsys, monkeypatch):
    solver = tmp_path / "solver.sh"
    solver.write_text("#!/bin/sh\necho unsat\n")
    solver.chmod(0o755)
    unknown = write(
        tmp_path,
        "stream u = (a : u) (+ 1/2) tail(tail(tail((a : b : u) (+ 1/2) c : d : u)))\n",
        "unk.defs",
    )
    monkeypatch.setenv("ASP_SMT_SOLVER", str(solver))
    # with every undetermined head reported almost-sure by the solver, the
    # chain has no divergence left and the verdict resolves
    code = main(["check", unknown, "--no-tier3"])
    out = capsys.readouterr().out
    assert code in (0, 1)
    assert "Unknown" not in out


def test_missing_file_exits_3(tmp_path, capsys):
    assert main(["measure", str(tmp_path / "nope.defs")]) == 3
    assert "error" in capsys.readouterr().err
