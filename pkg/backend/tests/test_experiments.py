#!/usr/bin/env python3
"""
Tests for the experiment runners, statistics and artifacts
"""

import json

import numpy as np
import pandas as pd
import pytest

from app.config import EXPERIMENT_PLANS
from app.errors import DegenerateFit, EmptyBatch, InvalidParameter
from app.services import experiments
from app.services.attraction_domain import pareto_preset
from app.services.experiments import (
    ExperimentConfig,
    config_from_plan,
    bound_comparison,
    emit_experiment,
    expected_slope,
    fit_loglog_slope,
    histogram_masses,
    ks_statistic,
    l1_distance,
    overlay_improves,
    run_call_error,
    run_density_overlay,
    run_ks_rate,
    run_rate_sweep,
    slope_within_tolerance,
)


@pytest.fixture
def pareto():
    return pareto_preset(1.5)


def test_ks_statistic_of_uniform_grid():
    """k/n - 1/(2n) midpoints against the U(0,1) CDF give KS = 1/(2n)"""
    n = 200
    values = (np.arange(1, n + 1) - 0.5) / n
    assert ks_statistic(values, lambda x: x) == pytest.approx(0.5 / n)
    with pytest.raises(EmptyBatch):
        ks_statistic(np.array([]), lambda x: x)


def test_ks_statistic_two_points_and_order():
    assert ks_statistic(np.array([0.25, 0.75]), lambda x: x) == pytest.approx(0.25)
    values = np.random.default_rng(0).uniform(size=50)
    assert ks_statistic(values, lambda x: x) == ks_statistic(np.sort(values), lambda x: x)


def test_fit_recovers_exact_power_law():
    points = [(n, 2.0 * n ** -0.5) for n in (100, 1000, 10_000, 100_000)]
    fit = fit_loglog_slope(points, resamples=200, seed=1)
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(np.log(2.0))
    assert fit.ci[0] == pytest.approx(-0.5) and fit.ci[1] == pytest.approx(-0.5)


def test_fit_without_bootstrap_for_few_points():
    fit = fit_loglog_slope([(10, 1.0), (100, 0.1)])
    assert fit.slope == pytest.approx(-1.0)
    assert fit.ci is None


def test_fit_rejects_degenerate_points():
    with pytest.raises(DegenerateFit):
        fit_loglog_slope([(10, 1.0)])
    with pytest.raises(DegenerateFit):
        fit_loglog_slope([(10, 1.0), (10, 2.0)])
    with pytest.raises(DegenerateFit):
        fit_loglog_slope([(10, 0.0), (100, 1.0)])


@pytest.mark.slow
def test_bootstrap_interval_covers_noisy_slope():
    """95% pairs-bootstrap CI on 40 noisy points covers the true slope in at least 90 of 100 noise draws"""
    n = np.geomspace(100, 1e6, 40)
    hits = 0
    trials = 100
    for seed in range(trials):
        noise = np.random.default_rng(seed).normal(0.0, 0.1, n.size)
        points = list(zip(n, 0.5 * n ** (-1.0 / 3.0) * np.exp(noise)))
        lo, hi = fit_loglog_slope(points, resamples=400, seed=seed).ci
        hits += lo <= -1.0 / 3.0 <= hi
    assert hits / trials >= 0.90


def test_histogram_masses_cover_everything():
    values = np.array([-1e6, -5.0, 0.0, 0.5, 20.0, 1e9])
    masses = histogram_masses(values, [-10.0, 0.0, 10.0])
    assert masses.sum() == pytest.approx(1.0)
    assert masses.tolist() == pytest.approx([1 / 6, 1 / 6, 2 / 6, 2 / 6])


def test_l1_distance():
    y = np.linspace(0.0, 1.0, 101)
    assert l1_distance(y, y, y) == 0.0
    assert l1_distance(y, np.ones_like(y), np.zeros_like(y)) == pytest.approx(1.0)


def test_config_validation(pareto):
    with pytest.raises(InvalidParameter):
        ExperimentConfig(law=pareto, n_list=[], paths_list=[])
    with pytest.raises(InvalidParameter):
        ExperimentConfig(law=pareto, n_list=[10, 100], paths_list=[10])
    with pytest.raises(InvalidParameter):
        ExperimentConfig(law=pareto, n_list=[10], paths_list=[10], ks_mode="anderson")
    with pytest.raises(InvalidParameter):
        ExperimentConfig(law=pareto, n_list=[10], paths_list=[10], M_list=[0.0])


def test_plans_load():
    names = {plan["name"] for plan in EXPERIMENT_PLANS}
    assert {"rate_recovery", "rate_recovery_large_paths", "theorem_audit", "density_overlay"} <= names
    plan = next(p for p in EXPERIMENT_PLANS if p["name"] == "theorem_audit")
    config = config_from_plan(plan, alpha=1.2, seed=3)
    assert config.law.alpha == 1.2 and config.seed == 3
    assert config.M_list == [1.0, 2.0, 4.0]


def test_ks_rate_small_run(pareto):
    config = ExperimentConfig(law=pareto, n_list=[10, 100, 1000], paths_list=[2000, 2000, 2000], seed=11)
    result = run_ks_rate(config)
    assert [r.n for r in result.rows] == [10, 100, 1000]
    assert all(0.0 < r.ks < 1.0 for r in result.rows)
    assert result.fitted_slope is not None
    assert result.slope_ci is None
    frame = result.rates_frame()
    assert list(frame.columns) == ["n", "ks"]


def test_ks_rate_two_sample_mode(pareto):
    config = ExperimentConfig(law=pareto, n_list=[10, 100], paths_list=[500, 500], seed=2, ks_mode="two_sample")
    result = run_ks_rate(config)
    assert result.ks_mode == "two_sample"
    assert all(r.ks is not None for r in result.rows)


def test_ks_rate_deterministic_across_threads(pareto):
    serial = run_ks_rate(ExperimentConfig(law=pareto, n_list=[10, 50], paths_list=[500, 500], seed=4))
    pooled = run_ks_rate(ExperimentConfig(law=pareto, n_list=[10, 50], paths_list=[500, 500], seed=4, threads=2))
    assert [r.ks for r in serial.rows] == [r.ks for r in pooled.rows]


def test_call_error_within_bound(pareto):
    config = ExperimentConfig(law=pareto, n_list=[100], paths_list=[20_000], M_list=[2.5, 4.0], seed=7)
    result = run_call_error(config)
    frame = result.call_frame()
    assert list(frame.columns) == ["n", "M", "error", "se", "bound", "pass"]
    assert len(frame) == 2
    assert result.all_passed


def test_call_error_needs_strikes(pareto):
    with pytest.raises(InvalidParameter):
        run_call_error(ExperimentConfig(law=pareto, n_list=[10], paths_list=[10]))


def test_density_overlay(pareto):
    config = ExperimentConfig(law=pareto, n_list=[100], paths_list=[4000], seed=5)
    overlay = run_density_overlay(config)
    assert list(overlay.frame.columns) == ["y", "f_n100", "f_stable"]
    assert len(overlay.frame) == 401
    assert sum(overlay.tail_masses["f_n100"]) == pytest.approx(1.0)
    assert 0.0 <= overlay.l1["f_n100"] < 0.5


def test_rate_sweep(pareto):
    by_n = run_rate_sweep(pareto, n_values=[100, 1000, 10_000])
    assert list(by_n.columns) == ["n", "M", "Rn", "c1", "uniform_bound", "nonuniform_bound", "regime"]
    assert by_n["uniform_bound"].is_monotonic_decreasing
    by_M = run_rate_sweep(pareto, M_values=[4.0, 40.0], n=1000)
    assert by_M["nonuniform_bound"].iloc[1] < by_M["nonuniform_bound"].iloc[0]
    with pytest.raises(InvalidParameter):
        run_rate_sweep(pareto)


def test_emit_experiment_artifacts(tmp_path, pareto):
    config = ExperimentConfig(law=pareto, n_list=[10, 100], paths_list=[500, 500], seed=1, output_dir=tmp_path)
    report = emit_experiment("ks_rate", config)
    assert (tmp_path / "rates.csv").exists()
    assert (tmp_path / "figure1a.svg").exists()
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["kind"] == "ks_rate"
    assert saved["config"]["n_list"] == [10, 100]
    assert "numpy" in saved["versions"]
    assert saved["slope"] == pytest.approx(report["slope"])
    frame = pd.read_csv(tmp_path / "rates.csv")
    assert frame["n"].tolist() == [10, 100]
    with pytest.raises(InvalidParameter):
        emit_experiment("histogram", config)


def test_emitted_files_are_reproducible(tmp_path, pareto):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        config = ExperimentConfig(law=pareto, n_list=[10, 100], paths_list=[300, 300], seed=8, output_dir=out)
        emit_experiment("ks_rate", config)
    assert (first / "rates.csv").read_bytes() == (second / "rates.csv").read_bytes()
    assert (first / "figure1a.svg").read_bytes() == (second / "figure1a.svg").read_bytes()


@pytest.mark.slow
def test_rate_recovery_slope(pareto):
    """
    KS decays like n^{(alpha-2)/alpha} = n^{-1/3} at alpha = 1.5. With 200k paths
    the sampling floor 0.87/sqrt(N) stays below the n^{-1/3} term up to n = 3000.
    """
    slopes = [
        run_ks_rate(ExperimentConfig(law=pareto, n_list=[30, 300, 3000], paths_list=[200_000] * 3,
                                     seed=seed, threads=3)).fitted_slope
        for seed in (1, 2, 3)
    ]
    assert abs(np.mean(slopes) - expected_slope(1.5)) <= 0.12
    assert slope_within_tolerance(float(np.mean(slopes)), 1.5)


@pytest.mark.slow
def test_density_overlay_improves_with_n(pareto):
    config = ExperimentConfig(law=pareto, n_list=[100, 1000], paths_list=[8000, 8000], seed=11)
    overlay = run_density_overlay(config)
    assert overlay.l1["f_n1000"] < overlay.l1["f_n100"]


def test_slope_acceptance():
    assert expected_slope(1.5) == pytest.approx(-1.0 / 3.0)
    assert expected_slope(1.2) == pytest.approx(-2.0 / 3.0)
    assert slope_within_tolerance(-0.40, 1.5)
    assert slope_within_tolerance(-0.22, 1.5)
    assert not slope_within_tolerance(-0.50, 1.5)
    assert not slope_within_tolerance(0.0, 1.5)
    assert not slope_within_tolerance(None, 1.5)


def test_overlay_improves_compares_extreme_sample_sizes():
    l1 = {"f_n100": 0.2, "f_n500": 0.25, "f_n1000": 0.1}
    assert overlay_improves(l1, [100, 500, 1000])
    assert not overlay_improves({"f_n100": 0.1, "f_n1000": 0.2}, [1000, 100])
    assert overlay_improves({"f_n100": 0.3}, [100])


@pytest.mark.parametrize("decay,passed", [(-1.0 / 3.0, True), (0.0, False), (-1.0, False)])
def test_ks_rate_report_passes_on_slope(tmp_path, pareto, monkeypatch, decay, passed):
    monkeypatch.setattr(experiments, "ks_statistic", lambda sn, cdf: 0.5 * sn.meta["n"] ** decay)
    config = ExperimentConfig(law=pareto, n_list=[10, 100, 1000], paths_list=[50, 50, 50], seed=1, output_dir=tmp_path)
    report = emit_experiment("ks_rate", config, figures=False)
    assert report["slope"] == pytest.approx(decay)
    assert report["expected_slope"] == pytest.approx(-1.0 / 3.0)
    assert report["passed"] is passed
    assert json.loads((tmp_path / "report.json").read_text())["passed"] is passed


def test_call_error_report_compares_bounds(tmp_path, pareto):
    config = ExperimentConfig(law=pareto, n_list=[100], paths_list=[2000], M_list=[1.0, 4.0], seed=3,
                              output_dir=tmp_path)
    report = emit_experiment("call_error", config)
    comparison = report["bound_comparison"]
    assert [(row["n"], row["M"]) for row in comparison] == [(100, 1.0), (100, 4.0)]
    for row in comparison:
        assert row["nonuniform_smaller"] == (row["nonuniform_bound"] < row["uniform_bound"])
    assert bound_comparison(run_call_error(config)) == comparison


def test_density_overlay_report_passes_on_l1(tmp_path, pareto):
    config = ExperimentConfig(law=pareto, n_list=[10, 100], paths_list=[500, 500], seed=2, output_dir=tmp_path)
    report = emit_experiment("density_overlay", config, figures=False)
    assert report["passed"] == (report["l1"]["f_n100"] <= report["l1"]["f_n10"])
