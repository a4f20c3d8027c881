#!/usr/bin/env python3
"""
Tests for the stable law: density, CDF, call function and sampler
"""

import numpy as np
import pandas as pd
import pytest
from scipy import special

from app.errors import InvalidParameter
from app.services.sample_io import SampleBatch
from app.services.stable_dist import (
    OscIntegralSpec,
    StableParams,
    build_density_grid,
    call_expectation_stable,
    call_function_standard,
    cdf,
    char_fn,
    cms_transform,
    d_alpha,
    density,
    density_deriv,
    osc_integral,
    quantile,
    sample,
    tail_constants,
)


@pytest.fixture
def symmetric():
    return StableParams(1.5)


def test_char_fn_at_zero_is_one(symmetric):
    assert char_fn(symmetric, 0.0) == pytest.approx(1.0)


def test_char_fn_conjugate_symmetry():
    p = StableParams(1.3, delta=0.4)
    lam = np.array([0.2, 1.0, 3.5])
    assert np.allclose(char_fn(p, -lam), np.conj(char_fn(p, lam)))
    assert np.all(np.abs(char_fn(p, lam)) <= 1.0)


def test_density_at_origin_matches_gamma_form(symmetric):
    """p(0) = Gamma(1 + 1/alpha) / pi for delta = 0"""
    expected = special.gamma(1.0 + 1.0 / 1.5) / np.pi
    assert density(symmetric, 0.0) == pytest.approx(expected, rel=1e-6)
    assert expected == pytest.approx(0.2874, abs=1e-4)


def test_density_symmetric_and_reflected():
    y = np.array([0.5, 2.0, 7.0])
    sym = StableParams(1.5)
    assert np.allclose(density(sym, y), density(sym, -y), rtol=1e-6)
    right, left = StableParams(1.5, delta=0.5), StableParams(1.5, delta=-0.5)
    assert np.allclose(density(right, y), density(left, -y), rtol=1e-6)


def test_density_scaling():
    y = np.array([-1.0, 0.3, 4.0])
    wide = StableParams(1.7, sigma=2.0)
    unit = StableParams(1.7)
    assert np.allclose(density(wide, y), density(unit, y / 2.0) / 2.0, rtol=1e-8)


def test_density_derivative_vanishes_at_mode_of_symmetric_law(symmetric):
    assert density_deriv(symmetric, 0.0) == pytest.approx(0.0, abs=1e-8)
    assert density_deriv(symmetric, 1.0) < 0.0


def test_d_alpha_matches_gamma_form():
    assert d_alpha(1.5) == pytest.approx(0.5984, abs=1e-4)
    closed = -special.gamma(-1.5) * np.cos(0.75 * np.pi)
    assert d_alpha(1.5) == pytest.approx(1.0 / closed, rel=1e-12)


def test_tail_constants_split_by_skew():
    plus, minus = tail_constants(1.5, 0.5)
    assert plus / minus == pytest.approx(3.0)
    assert plus + minus == pytest.approx(d_alpha(1.5) / 1.5)


def test_grid_mass_and_median():
    grid = build_density_grid(1.5, 0.0)
    assert grid.mass == pytest.approx(1.0, abs=1e-6)
    assert float(grid.cdf(0.0)) == pytest.approx(0.5, abs=1e-6)
    values = grid.cdf(np.linspace(-100.0, 100.0, 2001))
    assert np.all(np.diff(values) >= -1e-12)


def test_quantile_inverts_cdf(symmetric):
    assert quantile(symmetric, 0.5) == pytest.approx(0.0, abs=1e-6)
    level = float(cdf(symmetric, 1.3))
    assert quantile(symmetric, level) == pytest.approx(1.3, abs=1e-6)


def test_call_put_parity_for_symmetric_law():
    """E(Y + m)_+ - E(Y - m)_+ = m when E Y = 0 and Y is symmetric"""
    for m in (0.5, 2.0, 10.0):
        gap = call_function_standard(1.5, 0.0, -m) - call_function_standard(1.5, 0.0, m)
        assert float(gap) == pytest.approx(m, rel=1e-6)


def test_call_tail_asymptotic():
    """E(Y - M)_+ ~ K+ M^{1-alpha} / (alpha - 1) for large M"""
    M = 1000.0
    plus, _ = tail_constants(1.5, 0.0)
    value = call_expectation_stable(StableParams(1.5), M)
    assert value == pytest.approx(plus * M ** -0.5 / 0.5, rel=1e-2)


def test_call_scales_with_sigma():
    value = call_expectation_stable(StableParams(1.5, sigma=2.0), 3.0)
    assert value == pytest.approx(2.0 * call_expectation_stable(StableParams(1.5), 1.5), rel=1e-10)


def test_invalid_parameters_name_the_field():
    with pytest.raises(InvalidParameter) as info:
        StableParams(2.5)
    assert info.value.field == "alpha"
    with pytest.raises(InvalidParameter) as info:
        StableParams(1.5, delta=1.5)
    assert info.value.field == "delta"
    with pytest.raises(InvalidParameter):
        call_expectation_stable(StableParams(1.5), 0.0)


def test_cms_transform_maps_origin_to_zero():
    assert cms_transform(1.5, 0.0, np.array([0.0]), np.array([1.0]))[0] == pytest.approx(0.0)


def test_sample_reproducible_across_thread_counts():
    p = StableParams(1.5, delta=0.3)
    one = sample(p, 200_000, seed=42, threads=1)
    four = sample(p, 200_000, seed=42, threads=4)
    assert np.array_equal(one.values, four.values)
    assert not np.array_equal(one.values, sample(p, 200_000, seed=43).values)


def test_sample_matches_cdf(symmetric):
    batch = sample(symmetric, 200_000, seed=7)
    x = np.sort(batch.values)
    i = np.arange(1, x.size + 1)
    ks = np.max(np.abs(cdf(symmetric, x) - i / x.size))
    assert ks < 0.01


def test_sample_batch_files(tmp_path, symmetric):
    batch = sample(symmetric, 1000, seed=3)
    batch.to_binary(tmp_path / "s.bin")
    batch.to_csv(tmp_path / "s.csv")
    assert np.array_equal(SampleBatch.from_binary(tmp_path / "s.bin").values, batch.values)
    assert np.array_equal(SampleBatch.from_csv(tmp_path / "s.csv").values, batch.values)
    with pytest.raises(ValueError):
        SampleBatch.from_binary(tmp_path / "s.csv")


@pytest.mark.slow
@pytest.mark.parametrize("alpha,delta", [(1.2, -0.9), (1.5, 0.5), (1.8, 0.9)])
def test_empirical_characteristic_function(alpha, delta):
    p = StableParams(alpha, delta=delta)
    values = sample(p, 1_000_000, seed=17, threads=4, general_skew=True).values
    lam = np.linspace(-5.0, 5.0, 21)
    empirical = np.exp(1j * np.outer(lam, values)).mean(axis=1)
    assert np.max(np.abs(empirical - char_fn(p, lam))) < 0.01


def _osc(kind, r, y, delta, alpha):
    return osc_integral(OscIntegralSpec(r=r, delta=delta, y=y, alpha=alpha), kind)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_osc_integrals_at_origin(alpha):
    """I_0(0) = Gamma(1/alpha)/alpha and J_0(0) = 0 for the symmetric law"""
    assert _osc("I", 0.0, 0.0, 0.0, alpha) == pytest.approx(special.gamma(1.0 / alpha) / alpha, rel=1e-7)
    assert _osc("J", 0.0, 0.0, 0.0, alpha) == pytest.approx(0.0, abs=1e-12)


def test_osc_integrals_bounded_by_gamma_form():
    gen = np.random.default_rng(5)
    for _ in range(20):
        alpha, r = gen.uniform(1.1, 1.9), gen.uniform(0.0, 3.0)
        y, delta = gen.uniform(-10.0, 10.0), gen.uniform(-1.0, 1.0)
        limit = special.gamma((r + 1.0) / alpha) / alpha
        for kind in ("I", "J"):
            assert abs(_osc(kind, r, y, delta, alpha)) <= limit * (1.0 + 1e-8)


def test_osc_integral_recursions():
    """
    Integration by parts in lambda ties each order to lower ones:
      y I_r = r J_{r-1} - alpha J_{alpha+r-1} + alpha s I_{alpha+r-1}
      y J_r = -r I_{r-1} + alpha I_{alpha+r-1} + alpha s J_{alpha+r-1}
    with s = delta tan(pi alpha/2).
    """
    gen = np.random.default_rng(11)
    rel_tol = OscIntegralSpec(r=0.0, delta=0.0, y=0.0, alpha=1.5).rel_tol
    for _ in range(20):
        alpha, r = gen.uniform(1.2, 1.8), gen.uniform(0.2, 2.0)
        y = gen.choice([-1.0, 1.0]) * gen.uniform(0.5, 5.0)
        delta = gen.uniform(-1.0, 1.0)
        s = delta * np.tan(np.pi * alpha / 2.0)
        I_shift, J_shift = _osc("I", alpha + r - 1.0, y, delta, alpha), _osc("J", alpha + r - 1.0, y, delta, alpha)
        I_lower, J_lower = _osc("I", r - 1.0, y, delta, alpha), _osc("J", r - 1.0, y, delta, alpha)
        I_rhs = (r * J_lower - alpha * J_shift + alpha * s * I_shift) / y
        J_rhs = (-r * I_lower + alpha * I_shift + alpha * s * J_shift) / y
        assert abs(_osc("I", r, y, delta, alpha) - I_rhs) <= 1e3 * rel_tol
        assert abs(_osc("J", r, y, delta, alpha) - J_rhs) <= 1e3 * rel_tol


@pytest.mark.parametrize("delta", [0.0, 0.5])
def test_density_deriv_matches_finite_differences(delta):
    p, h = StableParams(1.5, delta=delta), 1e-3
    y = np.linspace(-5.0, 5.0, 41)
    diff = (density(p, y + h) - density(p, y - h)) / (2.0 * h)
    assert np.max(np.abs(density_deriv(p, y) - diff)) < 1e-6
    assert density_deriv(p, 1.0) == pytest.approx(float(density_deriv(p, np.array([1.0]))[0]), abs=1e-8)


@pytest.mark.parametrize("delta", [-0.9, -0.5, 0.0, 0.5, 0.9])
@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_grid_tails_match_series(alpha, delta):
    """Mass one, leading tail constants (1 +- delta) d_alpha / 2 and survival K+- y^-alpha far out"""
    grid = build_density_grid(alpha, delta)
    assert grid.mass == pytest.approx(1.0, abs=1e-6)
    d = d_alpha(alpha)
    assert grid.c_tail[0] == pytest.approx((1.0 + delta) * d / 2.0, rel=1e-4)
    assert grid.c_tail[1] == pytest.approx((1.0 - delta) * d / 2.0, rel=1e-4)
    plus, minus = tail_constants(alpha, delta)
    far = 1e5
    assert 1.0 - grid.cdf(far) == pytest.approx(plus * far ** -alpha, rel=1e-3)
    assert grid.cdf(-far) == pytest.approx(minus * far ** -alpha, rel=1e-3)
    values = grid.cdf(np.linspace(-200.0, 200.0, 4001))
    assert np.all(np.diff(values) >= -1e-12)


def test_grid_csv_columns(tmp_path):
    grid = build_density_grid(1.5, 0.0)
    path = tmp_path / "grid.csv"
    grid.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "y,p"
    assert len(lines) == grid.y.size + 1
    frame = pd.read_csv(path)
    assert np.array_equal(frame["y"].to_numpy(), grid.y)
    assert np.array_equal(frame["p"].to_numpy(), grid.p)
