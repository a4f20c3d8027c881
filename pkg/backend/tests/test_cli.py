#!/usr/bin/env python3
"""
Tests for the command line surface
"""

import json

import pandas as pd
import pytest

from app.cli import EXIT_AUDIT_FAILED, EXIT_OK, EXIT_VALIDATION, dispatch
from app.services.sample_io import SampleBatch


def test_density_prints_value(capsys):
    assert dispatch(["density", "--alpha", "1.5", "--y", "0", "1"]) == EXIT_OK
    values = [float(line) for line in capsys.readouterr().out.split()]
    assert values[0] == pytest.approx(0.2874, abs=1e-4)
    assert len(values) == 2


def test_cdf_and_call(capsys):
    assert dispatch(["cdf", "--alpha", "1.5", "--y", "0"]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(0.5, abs=1e-6)
    assert dispatch(["call", "--alpha", "1.5", "--M", "2"]) == EXIT_OK
    assert 0.0 < float(capsys.readouterr().out) < 2.0


def test_invalid_alpha_names_the_flag(capsys):
    assert dispatch(["density", "--alpha", "2.5", "--y", "0"]) == EXIT_VALIDATION
    assert "--alpha" in capsys.readouterr().err


def test_invalid_strike(capsys):
    assert dispatch(["call", "--alpha", "1.5", "--M", "-1"]) == EXIT_VALIDATION
    assert "--M" in capsys.readouterr().err


def test_parse_errors_are_validation_failures(capsys):
    assert dispatch(["density", "--y", "0"]) == EXIT_VALIDATION
    assert dispatch([]) == EXIT_VALIDATION
    assert dispatch(["density", "--alpha", "x", "--y", "0"]) == EXIT_VALIDATION
    assert "error" in capsys.readouterr().err


def test_sample_writes_csv(tmp_path, capsys):
    out = tmp_path / "draws.csv"
    assert dispatch(["sample", "--alpha", "1.5", "--n", "500", "--seed", "3", "--out", str(out)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n"] == 500
    assert SampleBatch.from_csv(out).n == 500


def test_sample_writes_binary(tmp_path, capsys):
    out = tmp_path / "draws.bin"
    assert dispatch(["sample", "--alpha", "1.5", "--n", "100", "--format", "bin", "--out", str(out)]) == EXIT_OK
    assert SampleBatch.from_binary(out).n == 100


def test_bounds_report_json(capsys):
    assert dispatch(["bounds", "--preset", "pareto", "--alpha", "1.5", "--n", "1000", "--M", "4"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert list(report)[:4] == ["eta1", "eta2", "eta3", "eta4"]
    assert report["regime"] == "γ>2−α"
    assert report["nonuniform_bound"] is not None


def test_bounds_fractional_gamma(capsys):
    assert dispatch(["bounds", "--preset", "perturbed_pareto", "--alpha", "1.5", "--gamma", "1/2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["regime"] == "γ=2−α"


def test_bounds_rejects_options_the_preset_ignores(capsys):
    assert dispatch(["bounds", "--preset", "pareto", "--alpha", "1.5", "--gamma", "1/2"]) == EXIT_VALIDATION
    assert "--gamma" in capsys.readouterr().err
    assert dispatch(["bounds", "--preset", "pareto", "--alpha", "1.5", "--A", "0.4"]) == EXIT_VALIDATION
    assert "--A" in capsys.readouterr().err
    argv = ["experiment", "--kind", "ks_rate", "--alpha", "1.5", "--gamma", "1/2", "--n-list", "10", "100",
            "--paths-list", "50", "50", "--no-figures"]
    assert dispatch(argv) == EXIT_VALIDATION
    assert "--gamma" in capsys.readouterr().err


def test_bounds_custom_A_and_L(capsys):
    base = ["bounds", "--preset", "perturbed_pareto", "--alpha", "1.5", "--n", "1000"]
    assert dispatch(base) == EXIT_OK
    default = json.loads(capsys.readouterr().out)
    assert dispatch(base + ["--L", "1.0"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["c1"] > default["c1"]
    assert dispatch(base + ["--A", "0.4", "--c", "0.1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["sigma"] < default["sigma"]
    assert dispatch(base + ["--L", "0.1"]) == EXIT_VALIDATION
    assert "L/|x|^gamma" in capsys.readouterr().err


def test_bounds_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert dispatch(["bounds", "--alpha", "1.5", "--sweep-n", "100", "1000", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out)
    assert frame["n"].tolist() == [100, 1000]


def test_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "run.env"
    config.write_text("alpha=2.5\ny=0\n")
    assert dispatch(["--config", str(config), "density"]) == EXIT_VALIDATION
    capsys.readouterr()
    assert dispatch(["--config", str(config), "density", "--alpha", "1.5"]) == EXIT_OK
    assert float(capsys.readouterr().out) == pytest.approx(0.2874, abs=1e-4)


def test_missing_config_file(tmp_path, capsys):
    assert dispatch(["--config", str(tmp_path / "none.env"), "density", "--alpha", "1.5", "--y", "0"]) == EXIT_VALIDATION
    assert "--config" in capsys.readouterr().err


def test_experiment_by_kind(tmp_path, capsys):
    argv = [
        "experiment", "--kind", "ks_rate", "--alpha", "1.5", "--n-list", "10", "100",
        "--paths-list", "300", "300", "--seed", "1", "--no-figures", "--out", str(tmp_path),
    ]
    code = dispatch(argv)
    summary = json.loads(capsys.readouterr().out)
    assert summary["kind"] == "ks_rate"
    assert code == (EXIT_OK if summary["passed"] else EXIT_AUDIT_FAILED)
    assert (tmp_path / "rates.csv").exists() and (tmp_path / "report.json").exists()
    assert not (tmp_path / "figure1a.svg").exists()


def test_experiment_needs_plan_or_kind(capsys):
    assert dispatch(["experiment", "--alpha", "1.5"]) == EXIT_VALIDATION
    assert dispatch(["experiment", "--plan", "nonexistent"]) == EXIT_VALIDATION
    assert dispatch(["experiment", "--kind", "ks_rate", "--alpha", "1.5"]) == EXIT_VALIDATION


@pytest.mark.slow
def test_verify_stein(capsys):
    assert dispatch(["verify-stein", "--alpha", "1.5", "--M", "4"]) == EXIT_OK
    audit = json.loads(capsys.readouterr().out)
    assert audit["pass"]["residual"]
    assert "envelopes" in audit
