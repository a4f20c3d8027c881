#!/usr/bin/env python3
"""
Tests for the Stein solution, the generator and the Taylor remainder
"""

import numpy as np
import pytest

from app.errors import BudgetExceeded, DivergentInput, InvalidParameter, UnsupportedGamma
from app.services.attraction_domain import pareto_preset, preset_law
from app.services.bounds import eta_constants
from app.services.stein_core import (
    SteinSolution,
    SteinTestFn,
    TailLawXtilde,
    characteristic_exponent,
    fsecond_bounds,
    generator_apply,
    heat_kernel_envelope_check,
    regularity_audit,
    sample_xtilde,
    second_derivative_grid_sup,
    stein_fprime_call,
    stein_fsecond_call,
    stein_residual,
    taylor_bound,
    taylor_remainder_check,
)


def test_test_function_values():
    call, put = SteinTestFn.call(2.0), SteinTestFn.put(2.0)
    x = np.array([-5.0, 0.0, 5.0])
    assert np.array_equal(call(x), [0.0, 0.0, 3.0])
    assert np.array_equal(put(x), [3.0, 0.0, 0.0])
    assert SteinTestFn.identity()(1.5) == 1.5


def test_test_function_validation():
    with pytest.raises(InvalidParameter):
        SteinTestFn.call(0.0)
    with pytest.raises(InvalidParameter):
        SteinTestFn("digital", M=1.0)
    with pytest.raises(InvalidParameter):
        SteinTestFn.custom(lambda x: 2.0 * x)
    assert SteinTestFn.custom(np.sin).tag == "custom"


def test_characteristic_exponent_sign():
    psi = characteristic_exponent(1.5, 0.3, 2.0)
    assert psi.real == pytest.approx(-(2.0 ** 1.5))
    assert psi.imag == pytest.approx(0.3 * 2.0 ** 1.5 * np.tan(0.75 * np.pi))
    assert characteristic_exponent(1.5, 0.3, -2.0).imag == pytest.approx(-psi.imag)


@pytest.mark.parametrize("delta", [0.0, 0.3, -0.6])
def test_generator_on_cosine(delta):
    """A cos(y) = -cos(y) - delta tan(pi alpha/2) sin(y) at lambda = 1"""
    alpha, y = 1.5, 0.3
    value = generator_apply(np.cos, alpha, delta, y, fprime=lambda x: -np.sin(x), fsecond=lambda x: -np.cos(x),
                            span=2000.0)
    expected = -np.cos(y) - delta * np.tan(np.pi * alpha / 2.0) * np.sin(y)
    assert value == pytest.approx(expected, abs=1e-4)


def test_generator_annihilates_linear_functions():
    value = generator_apply(lambda x: 3.0 * np.asarray(x) - 1.0, 1.7, 0.4, 2.0)
    assert value == pytest.approx(0.0, abs=1e-6)


def test_generator_rejects_superlinear_growth():
    with pytest.raises(DivergentInput):
        generator_apply(lambda x: np.asarray(x) ** 2, 1.5, 0.0, 0.0)


def test_identity_solution_has_zero_residual():
    solution = SteinSolution(SteinTestFn.identity(), 1.5, 0.2)
    y = np.array([-2.0, 0.5, 3.0])
    assert np.allclose(solution.f(y), -1.5 * y)
    assert np.allclose(solution.residual(y), 0.0, atol=1e-9)


def test_fprime_range_and_limits():
    alpha = 1.5
    y = np.linspace(-20.0, 20.0, 81)
    values = stein_fprime_call(2.0, alpha, 0.0, y)
    assert np.all(values <= 0.0) and np.all(values >= -alpha)
    assert np.all(np.diff(values) <= 1e-8)
    assert stein_fprime_call(2.0, alpha, 0.0, -200.0) > -0.1
    assert stein_fprime_call(2.0, alpha, 0.0, 200.0) < -alpha + 0.1


def test_fsecond_is_derivative_of_fprime():
    y, h = 0.7, 1e-3
    diff = (stein_fprime_call(2.0, 1.5, 0.2, y + h) - stein_fprime_call(2.0, 1.5, 0.2, y - h)) / (2.0 * h)
    assert stein_fsecond_call(2.0, 1.5, 0.2, y) == pytest.approx(diff, abs=1e-3)


def test_put_solution_reflects_call():
    y = np.array([-1.0, 0.5, 4.0])
    put = SteinSolution(SteinTestFn.put(2.0), 1.5, 0.4)
    call = SteinSolution(SteinTestFn.call(2.0), 1.5, -0.4)
    assert np.allclose(put.fprime(y), -call.fprime(-y))
    assert put.nu_g == pytest.approx(call.nu_g)


def test_fsecond_within_uniform_bound():
    g = SteinTestFn.call(2.0)
    sup = second_derivative_grid_sup(g, 1.5, 0.0, np.linspace(-10.0, 10.0, 201))
    assert 0.0 < sup <= fsecond_bounds(1.5, 0.0, 2.0)["uniform"]


def test_fsecond_bounds_shape():
    bounds = fsecond_bounds(1.5, 0.0, 10.0)
    assert bounds["uniform"] == pytest.approx(4.0 * eta_constants(1.5, 0.0).eta2)
    assert bounds["nonuniform"] is not None and bounds["symmetric"] is not None
    assert fsecond_bounds(1.5, 0.3, 10.0)["symmetric"] is None
    assert fsecond_bounds(1.5, 0.0, 2.0)["nonuniform"] is None


@pytest.mark.parametrize("delta", [-0.9, -0.5, 0.0, 0.5, 0.9])
def test_heat_kernel_envelopes(delta):
    report = heat_kernel_envelope_check(1.5, delta)
    assert report["magnitude"]["density_ok"]
    assert report["magnitude"]["derivative_ok"]
    if delta == 0.0:
        assert report["symmetric"]["density_ok"]
    else:
        assert "symmetric" not in report


def test_tail_law_xtilde():
    law = TailLawXtilde(A=0.5, alpha=1.5, delta=0.2)
    assert law.edge == pytest.approx(1.0)
    x = np.array([1.5, 10.0])
    assert np.allclose(law.survival(x), 0.5 * 1.2 / x ** 1.5)
    assert np.allclose(law.quantile(1.0 - law.survival(x)), x)
    a = sample_xtilde(law, 10_000, seed=4)
    assert np.array_equal(a.values, sample_xtilde(law, 10_000, seed=4).values)
    assert np.all(np.abs(a.values) >= law.edge * (1.0 - 1e-12))


def test_taylor_bound_cases():
    boundary = taylor_bound(preset_law("perturbed_pareto", 1.5), 4.0, 0.1)
    assert boundary.case == "i" and boundary.bound > 0
    between = taylor_bound(preset_law("perturbed_pareto", 1.5, gamma=0.25), 4.0, 0.1)
    assert between.case == "ii" and between.bound > 0
    zero = taylor_bound(preset_law("log_perturbed", 1.5), 4.0, 0.1)
    assert zero.case == "iii"
    assert zero.readings["b_integral"] == pytest.approx(zero.readings["b_integral_plain"])


def test_taylor_bound_rejects_out_of_scope_inputs():
    with pytest.raises(UnsupportedGamma):
        taylor_bound(pareto_preset(1.5), 4.0, 0.1)
    with pytest.raises(InvalidParameter):
        taylor_bound(preset_law("perturbed_pareto", 1.5), 4.0, 1.5)


def test_taylor_check_budget():
    with pytest.raises(BudgetExceeded):
        taylor_remainder_check(preset_law("perturbed_pareto", 1.5), 4.0, 0.1, mc_paths=10_000, seed=0,
                               draw_budget=1000)


@pytest.mark.slow
@pytest.mark.parametrize("delta", [0.0, 0.5])
@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_call_residual_small(alpha, delta):
    g = SteinTestFn.call(2.0)
    y = np.array([-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0])
    residual = np.abs(stein_residual(g, alpha, delta, y))
    assert np.all(residual <= 1e-3 * (1.0 + np.abs(g(y))))


@pytest.mark.slow
@pytest.mark.parametrize("M", [4.0, 16.0, 64.0])
def test_regularity_audit_passes(M):
    audit = regularity_audit(M, 1.5, 0.0, tol=1e-4)
    assert audit["pass"]["fprime_range"]
    assert audit["pass"]["uniform"]
    assert audit["pass"]["nonuniform"]
    assert audit["pass"]["symmetric"]
    assert audit["pass"]["residual"]
    assert audit["fsecond_sup"] > 0


@pytest.mark.slow
@pytest.mark.parametrize("a", [0.2, 0.1, 0.05])
def test_taylor_remainder_within_bound(a):
    check = taylor_remainder_check(preset_law("perturbed_pareto", 1.5), 4.0, a, mc_paths=20_000, seed=5)
    assert check.T_hat <= check.bound + 3.0 * check.se
