#!/usr/bin/env python3
"""
Tests for the batch experiment runner
"""

import json

import pytest

from batch.main import ExperimentBatchProcessor, main, plan_alphas


@pytest.fixture
def small_plan():
    return {
        "name": "tiny_rate",
        "kind": "ks_rate",
        "preset": "pareto",
        "alpha": 1.5,
        "delta": 0.0,
        "n_list": [10, 50],
        "paths_list": [200, 200],
        "M_list": [],
        "seeds": [1, 2],
    }


def test_plan_alphas():
    assert plan_alphas({"alpha": 1.5}) == [1.5]
    assert plan_alphas({"alphas": [1.2, 1.8]}) == [1.2, 1.8]


def test_batch_writes_runs_and_summary(tmp_path, small_plan, capsys):
    processor = ExperimentBatchProcessor([small_plan], tmp_path, threads=2, figures=False)
    summary = processor.run()
    assert "[4/4]" in capsys.readouterr().out
    entry = summary["tiny_rate"]["1.5"]
    assert entry["runs"] == 2 and len(entry["slopes"]) == 2
    assert entry["mean_slope"] == pytest.approx(sum(entry["slopes"]) / 2)
    assert isinstance(entry["ok"], bool)
    for seed in (1, 2):
        assert (tmp_path / "tiny_rate" / "alpha_1.5" / f"seed_{seed}" / "rates.csv").exists()
    saved = json.loads((tmp_path / "summary.json").read_text())
    assert saved["tiny_rate"]["1.5"]["runs"] == 2


def test_unknown_plan_is_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["--plan", "no_such_plan", "--out", str(tmp_path)])


def test_summary_judges_rate_plans_on_mean_slope(tmp_path):
    processor = ExperimentBatchProcessor([], tmp_path, threads=1)
    processor.reports = {
        ("rate", 1.5): [{"kind": "ks_rate", "slope": -0.30, "passed": True},
                        {"kind": "ks_rate", "slope": -0.40, "passed": True}],
        ("steep", 1.5): [{"kind": "ks_rate", "slope": -1.0, "passed": False},
                         {"kind": "ks_rate", "slope": -0.9, "passed": False}],
        ("spread", 1.5): [{"kind": "ks_rate", "slope": -0.10, "passed": False},
                          {"kind": "ks_rate", "slope": -0.55, "passed": False}],
        ("audit", 1.2): [{"kind": "call_error", "passed": True}, {"kind": "call_error", "passed": False}],
    }
    summary = processor.summarize()
    assert summary["rate"]["1.5"]["mean_slope"] == pytest.approx(-0.35)
    assert summary["rate"]["1.5"]["ok"]
    assert not summary["steep"]["1.5"]["ok"]
    # no single seed lands in the window, the mean does
    assert summary["spread"]["1.5"]["passed"] == 0 and summary["spread"]["1.5"]["ok"]
    assert summary["audit"]["1.2"]["passed"] == 1 and not summary["audit"]["1.2"]["ok"]


@pytest.mark.parametrize("ok,code", [(True, 0), (False, 3)])
def test_exit_code_follows_summary(tmp_path, monkeypatch, ok, code):
    monkeypatch.setattr(ExperimentBatchProcessor, "run", lambda self: {"rate_recovery": {"1.5": {"ok": ok}}})
    assert main(["--plan", "rate_recovery", "--out", str(tmp_path)]) == code
