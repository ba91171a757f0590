import json

import pytest

from gsqc import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_build_reports_columns(tmp_path, capsys):
    inst = tmp_path / "one.cnf"
    inst.write_text("p ec3 3 1\n0 1 2\n")
    code, out, _ = run(capsys, "build", "--instance", str(inst), "--out", str(tmp_path / "a"))
    assert code == 0 and out.startswith("5 columns")
    summary = json.loads((tmp_path / "a" / "build.json").read_text())
    assert summary["n_columns"] == 5 and summary["within_capacity"]
    assert (tmp_path / "a" / "circuit.json").exists() and (tmp_path / "a" / "layout.txt").exists()
    code, out, _ = run(capsys, "build", "--instance", str(inst), "--teleport", "on", "--out", str(tmp_path / "b"))
    assert code == 0 and out.startswith("25 columns")
    assert "solve will refuse" in out


def test_build_empty_instance(tmp_path, capsys):
    inst = tmp_path / "empty.cnf"
    inst.write_text("p ec3 0 0\n")
    code, out, _ = run(capsys, "build", "--instance", str(inst), "--out", str(tmp_path))
    assert code == 0
    assert json.loads((tmp_path / "build.json").read_text())["dim"] == 1


def test_solve_boosted_qubit(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--circuit", "boosted-qubit", "--lambda", "10", "--boundary", "hard",
                       "--out", str(tmp_path))
    assert code == 0
    payload = json.loads((tmp_path / "solve.json").read_text())
    assert payload["final_rows"]["p_all_final"] == pytest.approx(100 / 101, abs=1e-9)
    assert "p_all_final = 0.990099" in out
    # every run records the configuration that produced it
    assert payload["config"]["lam"] == 10 and payload["config"]["command"] == "solve"


def test_solve_filter_box_support(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--gen", "3,1,0", "--boundary", "hard", "--lambda", "8", "--shots", "200",
                     "--out", str(tmp_path))
    assert code == 0
    payload = json.loads((tmp_path / "solve.json").read_text())
    support = {b for b, p in payload["conditional"].items() if p > 1e-9}
    assert support == {"100", "010", "001"}
    assert payload["samples"]["violations"] == 0


def test_solve_pinned(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--gen", "3,1,0", "--pinned", "--out", str(tmp_path))
    assert code == 0
    dist = json.loads((tmp_path / "distribution.json").read_text())
    assert {b for b, p in dist.items() if p > 1e-9} == {"100", "010", "001"}


def test_oracle_profile(tmp_path, capsys):
    code, out, _ = run(capsys, "oracle", "--gen", "9,9,1", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "ratio_profile.csv").read_text().splitlines()
    assert lines[0] == "j,S_j,ratio" and lines[1] == "0,512,"
    assert lines[2] == "1,192,8/3"
    code, _, _ = run(capsys, "oracle", "--gen", "9,9,1", "--order", "greedy-min-ratio", "--out", str(tmp_path))
    assert code == 0


def test_sweep_boosted_qubit(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--circuit", "boosted-qubit", "--out", str(tmp_path))
    assert code == 0
    meta = json.loads((tmp_path / "sweep.json").read_text())
    assert abs(meta["gap_exponent"] - 2.0) <= 0.1
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0] == "lambda,e0,gap,p_all_final,p_predicted"


def test_schedule_toy(tmp_path, capsys):
    code, out, _ = run(capsys, "schedule", "--circuit", "boosted-qubit", "--bigd", "10", "--grid", "4,4",
                       "--out", str(tmp_path))
    assert code == 0
    meta = json.loads((tmp_path / "schedule.json").read_text())
    assert meta["monotone_boost_stage"] and meta["final_lambda"] == pytest.approx(10**0.5)
    assert out.splitlines()[0] == "stage,s,e0,gap"


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0 and "all invariants pass" in out
    assert "FAIL" not in out


def test_exit_codes(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--gen", "3,1,0", "--teleport", "on", "--cap", "1000", "--out", str(tmp_path))
    assert code == cli.EXIT_CAPACITY and "capacity" in err
    code, _, err = run(capsys, "solve", "--circuit", "boosted-qubit", "--lambda", "0.5", "--out", str(tmp_path))
    assert code == cli.EXIT_VALIDATION and "lambda" in err
    code, _, err = run(capsys, "build", "--out", str(tmp_path))
    assert code == cli.EXIT_VALIDATION and "--instance or --gen" in err
    code, _, err = run(capsys, "oracle", "--gen", "5,11,0", "--out", str(tmp_path))
    assert code == cli.EXIT_CAPACITY
    code, _, err = run(capsys, "build", "--instance", str(tmp_path / "missing.cnf"), "--out", str(tmp_path))
    assert code == cli.EXIT_VALIDATION
    with pytest.raises(SystemExit):
        cli.main(["solve", "--gen", "3,1"])
