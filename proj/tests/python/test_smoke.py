import json
import math
import os
import subprocess

import pytest

import erwlab


def test_expression_roundtrip():
    assert erwlab.eval_expr("2*x^2 - 1", 0.5) == pytest.approx(-0.5)
    text = erwlab.canonical_expr("x^2+1")
    assert erwlab.eval_expr(text, 3.0) == pytest.approx(10.0)


def test_bad_expression_raises():
    with pytest.raises(erwlab.ErwlabError):
        erwlab.eval_expr("2*(x", 0.0)


def test_presets_listed():
    names = erwlab.preset_names()
    for name in ("erw", "minimal", "kdim", "random-step", "market"):
        assert name in names


def test_analyze_phase_boundary():
    assert erwlab.analyze("erw", p=0.75)["regime"] == "Critical"
    assert erwlab.analyze("erw", p=0.6)["regime"] == "Diffusive"
    rep = erwlab.analyze("erw", p=0.6)
    assert rep["clt_variance"][0][0] == pytest.approx(5.0 / 3.0, rel=1e-9)


def test_exact_pmf_sums_to_one():
    pmf = erwlab.exact_pmf("erw", {"p": "0.7"}, 12)
    assert len(pmf) == 13
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)


def test_simulate_is_deterministic():
    a = erwlab.simulate("erw", {"p": "0.6"}, n=500, N=50, seed=7)
    b = erwlab.simulate("erw", {"p": "0.6"}, n=500, N=50, seed=7, threads=1)
    assert a["final"] == b["final"]
    assert a["checkpoints"][-1] == 500


def test_sa_zero_noise():
    out = erwlab.sa_terminal("x", 0.0, "none", n=100, N=2)
    assert out == [0.0, 0.0]


def test_cli_in_process(tmp_path):
    code, out, err = erwlab.run_cli(["analyze", "--preset", "erw", "--p", "0.75"])
    assert code == 0, err
    assert json.loads(out)["regime_report"]["regime"] == "Critical"
    code, _, err = erwlab.run_cli(["analyze", "--model", str(tmp_path / "missing.json")])
    assert code == 2
    assert "config-invalid" in err


@pytest.mark.skipif("ERWLAB_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_binary(tmp_path):
    out = tmp_path / "report.json"
    res = subprocess.run(
        [os.environ["ERWLAB_CLI"], "verify", "--preset", "market", "--p", "0.5", "--suite", "slln",
         "--n", "2000", "--N", "200", "--seed", "3", "--out", str(out)],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    doc = json.loads(out.read_text())
    assert doc["pass"] is True
    assert doc["regime_report"]["limit"] == [pytest.approx(0.0, abs=1e-12)]
    assert (tmp_path / "report.json.meta.json").exists()
