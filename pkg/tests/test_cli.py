import json
import subprocess
import sys

import numpy as np
import pytest

from crdistill.ensembles import BipartiteState, save_bipartite
from crdistill.linalg import pure_state


def run_cli(*argv, **kw):
    return subprocess.run(
        [sys.executable, "-m", "crdistill.cli", *argv],
        capture_output=True, text=True, **kw,
    )


def test_info_builtin(two_state):
    res = run_cli("info", "two_state")
    assert res.returncode == 0
    assert "chi     = 0.600876037" in res.stdout
    assert "pure-state ensemble: True" in res.stdout


def test_info_with_parameter():
    res = run_cli("info", "bb84:0.3926990817")
    assert res.returncode == 0
    assert "alphabet size: 4" in res.stdout


def test_curve_csv_format(tmp_path):
    out = tmp_path / "curve.csv"
    res = run_cli("curve", "two_state", "--grid", "0:0.6:7", "--starts", "6",
                  "--out", str(out))
    assert res.returncode == 0
    lines = out.read_text().strip().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    assert any("seed=42" in h for h in header)
    body = [ln for ln in lines if not ln.startswith("#") and ln != "R,C,D"]
    assert len(body) == 7
    rows = [tuple(map(float, ln.split(","))) for ln in body]
    rs = [r for r, _, _ in rows]
    assert rs == sorted(rs)
    for r, c, d in rows:
        # columns are written with 9 significant digits
        assert c == pytest.approx(r + d, abs=2e-8)


def test_curve_closed_form(tmp_path):
    out = tmp_path / "cf.csv"
    res = run_cli("curve", "--closed-form", "uniform", "--grid", "0:1:9",
                  "--out", str(out))
    assert res.returncode == 0
    body = [ln for ln in out.read_text().splitlines()
            if ln and not ln.startswith("#") and ln != "R,C,D"]
    assert len(body) == 9
    ds = [float(ln.split(",")[2]) for ln in body]
    assert all(b >= a for a, b in zip(ds, ds[1:]))


def test_curve_witness_and_plot(tmp_path):
    out = tmp_path / "c.csv"
    wit = tmp_path / "w.json"
    plot = tmp_path / "p.gp"
    res = run_cli("curve", "two_state", "--grid", "0:0.6:4", "--starts", "4",
                  "--out", str(out), "--witness-out", str(wit),
                  "--plot-script", str(plot))
    assert res.returncode == 0
    doc = json.loads(wit.read_text())
    assert len(doc["points"]) == 4
    mat = np.asarray(doc["points"][0]["matrix"])
    assert np.allclose(mat.sum(axis=1), 1.0, atol=1e-9)
    assert "plot" in plot.read_text()


def test_curve_deterministic_across_threads(tmp_path):
    outs = []
    for name, threads in [("a.csv", "1"), ("b.csv", "4")]:
        out = tmp_path / name
        res = run_cli("curve", "two_state", "--grid", "0:0.5:5", "--starts", "4",
                      "--threads", threads, "--out", str(out))
        assert res.returncode == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_bad_input_file_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    res = run_cli("info", str(bad))
    assert res.returncode == 2
    assert "error:" in res.stderr


def test_unknown_builtin_exit_code():
    res = run_cli("info", "no_such_ensemble")
    assert res.returncode == 2


def test_envelope_exit_code():
    res = run_cli("check", "lemma3", "--dim", "32", "--trials", "1")
    assert res.returncode == 3


def test_check_failed_exit_code():
    res = run_cli("check", "duality", "two_state", "--points", "2",
                  "--starts", "4", "--tol-check", "1e-12")
    assert res.returncode == 1
    assert "duality max residual" in res.stdout


def test_check_lemma3_passes():
    res = run_cli("check", "lemma3", "--dim", "6", "--trials", "100")
    assert res.returncode == 0
    assert "0 violations" in res.stdout


def test_check_typicality(tmp_path):
    out = tmp_path / "bounds.csv"
    res = run_cli("check", "typicality", "two_state", "--n-list", "6,10",
                  "--delta", "0.15", "--trials", "200", "--out", str(out))
    assert res.returncode == 0
    assert out.read_text().startswith("n,delta,quantity,value,ci_low,ci_high")


def test_measure_accinfo():
    res = run_cli("measure", "accinfo", "two_state", "--starts", "8")
    assert res.returncode == 0
    assert "accessible information: 0.399123" in res.stdout


def test_measure_d1inf(tmp_path):
    path = tmp_path / "bell.json"
    save_bipartite(path, BipartiteState(2, 2,
                   pure_state(np.array([1, 0, 0, 1]) / np.sqrt(2))))
    res = run_cli("measure", "d1inf", str(path), "--starts", "8")
    assert res.returncode == 0
    assert "one-shot classical correlation: 1" in res.stdout
