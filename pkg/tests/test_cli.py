import json
import subprocess
import sys

import pytest

from giantwalk.cli import main
from giantwalk.exploration import check_path_identities, read_trajectory_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_theory_table_and_json(capsys):
    code, out, _ = run(capsys, "theory", "--lambda", "2", "--n", "100000")
    assert code == 0
    assert "rho" in out and "0.79681213" in out
    code, out, _ = run(capsys, "theory", "--lambda", "1.5", "--n", "100000", "--json")
    d = json.loads(out)
    assert d["sigma2"] == pytest.approx(1.736e5, rel=5e-3)
    assert set(d) >= {"rho", "lambda_star", "sigma2", "sigma", "t1", "a", "version"}


def test_theory_rejects_boundary(capsys):
    code, _, err = run(capsys, "theory", "--lambda", "1")
    assert code == 2
    assert "giantwalk:" in err


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["theory", "--lambda", "2", "--bogus"])
    assert exc.value.code == 2


def test_simulate_complete_graph(tmp_path, capsys):
    out_file = tmp_path / "t.csv"
    code, out, _ = run(capsys, "simulate", "--n", "3", "--lambda", "3", "--seed", "1",
                       "--p", "1", "--out", str(out_file))
    assert code == 0
    assert "L1=3" in out and "seed=1" in out
    lines = out_file.read_text().splitlines()
    assert lines[0] == "t,eta,A,C,U,X,Xtilde"
    assert len(lines) == 4


def test_simulate_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "simulate", "--n", "2000", "--lambda", "1.5", "--seed", "4",
                   "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_output_passes_identity_check(tmp_path, capsys):
    path = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", "--n", "10000", "--lambda", "1.5", "--seed", "7",
                     "--out", str(path))
    assert code == 0
    assert check_path_identities(read_trajectory_csv(path), 10000) == []


def test_simulate_unwritable(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--n", "10", "--lambda", "1.5",
                       "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 3
    assert "cannot write" in err


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("GIANTWALK_SEED", "17")
    _, out, _ = run(capsys, "simulate", "--n", "500", "--lambda", "1.5",
                    "--out", str(tmp_path / "a.csv"))
    assert "seed=17" in out
    _, out2, _ = run(capsys, "simulate", "--n", "500", "--lambda", "1.5", "--seed", "17",
                     "--out", str(tmp_path / "b.csv"))
    assert out == out2
    monkeypatch.setenv("GIANTWALK_SEED", "oops")
    code, _, _ = run(capsys, "simulate", "--n", "5", "--lambda", "1.5",
                     "--out", str(tmp_path / "c.csv"))
    assert code == 2


def test_mc_outputs(tmp_path, capsys):
    js, rows, hist = tmp_path / "r.json", tmp_path / "r.csv", tmp_path / "h.csv"
    code, out, _ = run(capsys, "mc", "--n", "20000", "--lambda", "1.5", "--replicas", "200",
                       "--seed", "1", "--json", str(js), "--csv", str(rows),
                       "--hist", str(hist), "--bins", "10")
    d = json.loads(js.read_text())
    assert code == (0 if d["passed"] else 1)
    assert "pass:standardized_ks" in out
    assert d["config"]["replicas"] == 200 and d["master_seed"] == 1
    assert len(rows.read_text().splitlines()) == 201
    assert len(hist.read_text().splitlines()) == 11


def test_mc_failing_predicate_exit_code(tmp_path, capsys):
    js = tmp_path / "r.json"
    code, _, _ = run(capsys, "mc", "--n", "3", "--lambda", "3", "--p", "1", "--replicas", "1",
                     "--json", str(js))
    assert code == 1
    assert json.loads(js.read_text())["L1_moments"]["variance_defined"] is False


def test_mc_json_independent_of_workers(tmp_path, capsys):
    paths = [tmp_path / "w1.json", tmp_path / "w4.json"]
    for path, w in zip(paths, ("1", "4")):
        run(capsys, "mc", "--n", "5000", "--lambda", "2", "--replicas", "50", "--seed", "3",
            "--workers", w, "--json", str(path))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_validate_commands(tmp_path, capsys):
    code, out, _ = run(capsys, "validate", "--mode", "enum", "--n", "2", "--p", "1",
                       "--replicas", "50")
    assert code == 0 and "passed" in out
    js = tmp_path / "v.json"
    code, _, _ = run(capsys, "validate", "--mode", "graph", "--n", "40", "--lambda", "1.5",
                     "--replicas", "500", "--seed", "2", "--json", str(js))
    d = json.loads(js.read_text())
    assert d["method"] == "ks_two_sample"
    assert code == (0 if d["passed"] else 1)
    code, _, _ = run(capsys, "validate", "--mode", "enum", "--n", "9", "--p", "0.5")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "giantwalk", "theory", "--lambda", "0.5"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
