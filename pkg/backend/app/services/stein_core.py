#!/usr/bin/env python3
"""
Stein machinery for S_alpha(1, delta): the generator, the solution f_g of
    A f(y) - y f'(y) / alpha = g(y) - nu(g)
and its derivatives, residual and regularity audits, the two-sided power
tail law X~ and the Monte Carlo Taylor-remainder check.

With w(u) = (1 - u^alpha)^{1/alpha} the solution reads
    f_g(y)  = -alpha int_0^1 (E g(u y + w(u) Y) - nu(g)) du / u
    f'_g(y) = -alpha int_0^1 E g'(u y + w(u) Y) du
so for g_M = (x - M)_+ the inner expectations are w C((M - u y)/w) and the
survival S((M - u y)/w) of the tabulated standard law.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np
from scipy import special
from scipy.interpolate import CubicHermiteSpline

from app.config import DRAW_BUDGET, RESIDUAL_TOL
from app.errors import (
    BudgetExceeded,
    DivergentInput,
    InvalidParameter,
    UnsupportedGamma,
)
from app.services.attraction_domain import (
    AttractionLaw,
    b_integral,
    b_sup_tail,
    checked_mean,
    sample_attraction,
)
from app.services.bounds import (
    REGIME_ABOVE,
    REGIME_BETWEEN,
    REGIME_BOUNDARY,
    eta_constants,
    gamma_regime,
    lemma_density_prefactor,
    m_exponents,
    q_constant,
)
from app.services.rng import STREAM_TAYLOR, STREAM_XTILDE, fill_blocks
from app.services.sample_io import SampleBatch
from app.services.stable_dist import (
    StableParams,
    build_density_grid,
    d_alpha,
    fourier_density,
    sample,
    validate_alpha_delta,
)
from app.utils.quadrature import dyadic_edges, panel_rule

# Gauss-Legendre order of the u-rules
U_ORDER = 8
# Dyadic grading depth at the ends of [0, 1]
U_LEVELS = 42
# Width of the uniform u panels
U_PANEL = 1.0 / 256.0

# Below this |u| the generator integrand is replaced by f''(y) u^2 / 2
TAYLOR_EPS = 1e-4
GENERATOR_HORIZON = 1e6
GENERATOR_SPAN_PAD = 64.0

# Rows of (points x u-nodes) evaluated at once
_CHUNK = 256


# ---------------------------------------------------------------------------
# Test functions and solutions
# ---------------------------------------------------------------------------

@dataclass
class SteinTestFn:
    """A Lipschitz(1) test function: call(M), put(M), identity or custom"""

    tag: str
    M: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.tag not in ("call", "put", "identity", "custom"):
            raise InvalidParameter(f"unknown test function tag {self.tag!r}", field="tag")
        if self.tag in ("call", "put") and not (self.M is not None and np.isfinite(self.M) and self.M > 0):
            raise InvalidParameter(f"strike M must be positive, got {self.M}", field="M")
        if self.tag == "custom":
            if self.func is None:
                raise InvalidParameter("custom test function needs a callable", field="func")
            self._probe_lipschitz()

    @classmethod
    def call(cls, M: float) -> "SteinTestFn":
        return cls("call", M=M)

    @classmethod
    def put(cls, M: float) -> "SteinTestFn":
        """(-x - M)_+, the reflection of the call"""
        return cls("put", M=M)

    @classmethod
    def identity(cls) -> "SteinTestFn":
        return cls("identity")

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray]) -> "SteinTestFn":
        return cls("custom", func=func)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == "call":
            return np.maximum(x - self.M, 0.0)
        if self.tag == "put":
            return np.maximum(-x - self.M, 0.0)
        if self.tag == "identity":
            return x
        return np.asarray(self.func(x), dtype=float)

    def _probe_lipschitz(self, pairs: int = 4000):
        gen = np.random.default_rng(20240611)
        x = gen.uniform(-50.0, 50.0, pairs)
        y = np.concatenate([gen.uniform(-50.0, 50.0, pairs // 2), x[pairs // 2:] + gen.normal(0.0, 1e-3, pairs - pairs // 2)])
        gap = np.abs(self(x) - self(y)) - np.abs(x - y) * (1.0 + 1e-9) - 1e-12
        if np.any(gap > 0):
            raise InvalidParameter("test function is not 1-Lipschitz on the probe set", field="func")


@lru_cache(maxsize=16)
def _u_rule(alpha: float):
    """Nodes u, w(u) and weights on (0, 1), graded at both ends"""
    head = dyadic_edges(0.0, U_PANEL, U_LEVELS)
    middle = np.linspace(U_PANEL, 1.0 - U_PANEL, int(round(1.0 / U_PANEL)) - 1)
    u_a, wt_a = panel_rule(np.concatenate([head, middle[1:]]), order=U_ORDER)
    eps, wt_b = panel_rule(dyadic_edges(0.0, U_PANEL, U_LEVELS), order=U_ORDER)
    u = np.concatenate([u_a, 1.0 - eps])
    one_minus = np.concatenate([-np.expm1(alpha * np.log(u_a)), -np.expm1(alpha * np.log1p(-eps))])
    return u, one_minus ** (1.0 / alpha), np.concatenate([wt_a, wt_b])


@lru_cache(maxsize=16)
def _v_rule(alpha: float):
    """
    Rule for f'' after u = 1 - v^{alpha/(alpha-1)}: returns u, w(u) and the
    weights with the Jacobian divided by w folded in (bounded as v -> 0).
    """
    beta = alpha / (alpha - 1.0)
    head = dyadic_edges(0.0, U_PANEL, U_LEVELS)
    middle = np.linspace(U_PANEL, 1.0 - U_PANEL, int(round(1.0 / U_PANEL)) - 1)
    tail = 1.0 - dyadic_edges(0.0, U_PANEL, U_LEVELS)[::-1]
    v, wt = panel_rule(np.concatenate([head, middle[1:-1], tail]), order=U_ORDER)
    log_v = np.log(v)
    vb = np.exp(beta * log_v)
    u = -np.expm1(beta * log_v)
    log_one_minus = np.where(
        vb < 1e-12,
        np.log(alpha) + beta * log_v,
        np.log(-np.expm1(alpha * np.log1p(-np.minimum(vb, 1.0 - 1e-16)))),
    )
    log_w = log_one_minus / alpha
    jac_over_w = np.exp(np.log(beta) + (beta - 1.0) * log_v - log_w)
    return u, np.exp(log_w), wt * jac_over_w


def _rows(y: np.ndarray):
    for start in range(0, y.size, _CHUNK):
        yield slice(start, min(start + _CHUNK, y.size))


def _as_output(y_in, out: np.ndarray):
    return float(out[0]) if np.ndim(y_in) == 0 else out.reshape(np.shape(y_in))


def stein_fprime_call(M: float, alpha: float, delta: float, y):
    """f'_{g_M}(y) = -alpha int_0^1 S((M - u y)/w(u)) du, in [-alpha, 0]"""
    if not (np.isfinite(M) and M > 0):
        raise InvalidParameter(f"strike M must be positive, got {M}", field="M")
    validate_alpha_delta(alpha, delta)
    grid = build_density_grid(float(alpha), float(delta))
    u, w, wt = _u_rule(float(alpha))
    ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    out = np.empty_like(ys)
    for rows in _rows(ys):
        arg = (M - ys[rows, None] * u) / w
        out[rows] = -alpha * ((1.0 - grid.cdf(arg)) @ wt)
    return _as_output(y, np.clip(out, -alpha, 0.0))


def stein_fsecond_call(M: float, alpha: float, delta: float, y):
    """f''_{g_M}(y) = -alpha int_0^1 p((M - u y)/w) u / w du, endpoint blow-up removed by substitution"""
    if not (np.isfinite(M) and M > 0):
        raise InvalidParameter(f"strike M must be positive, got {M}", field="M")
    validate_alpha_delta(alpha, delta)
    grid = build_density_grid(float(alpha), float(delta))
    u, w, wt = _v_rule(float(alpha))
    ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    out = np.empty_like(ys)
    for rows in _rows(ys):
        arg = (M - ys[rows, None] * u) / w
        out[rows] = -alpha * (grid.pdf(arg) @ (wt * u))
    return _as_output(y, out)


def _stein_f_call(M: float, alpha: float, delta: float, y):
    """f_{g_M}(y) = -alpha int_0^1 (w C((M - u y)/w) - nu) du / u"""
    grid = build_density_grid(float(alpha), float(delta))
    nu = float(grid.call(M))
    u, w, wt = _u_rule(float(alpha))
    ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    out = np.empty_like(ys)
    for rows in _rows(ys):
        arg = (M - ys[rows, None] * u) / w
        out[rows] = -alpha * (((w * grid.call(arg) - nu) / u) @ wt)
    return _as_output(y, out)


def _grid_expectation(grid, g: Callable, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """E g(a + b Y) by trapezoid on the grid, tails as atoms at their conditional means"""
    nodes = grid.y
    dens = grid.pdf(nodes)
    trap = np.empty_like(nodes)
    steps = np.diff(nodes)
    trap[0], trap[-1] = steps[0] / 2.0, steps[-1] / 2.0
    trap[1:-1] = (steps[:-1] + steps[1:]) / 2.0
    weights = trap * dens
    mass = grid.mass
    atoms = []
    if grid.right_mass > 0:
        atoms.append((grid.right_moment / grid.right_mass, grid.right_mass / mass))
    if grid.left_mass > 0:
        atoms.append((-grid.left_moment / grid.left_mass, grid.left_mass / mass))
    flat_a, flat_b = a.ravel(), b.ravel()
    out = np.empty_like(flat_a)
    for rows in _rows(flat_a):
        values = g(flat_a[rows, None] + flat_b[rows, None] * nodes) @ weights
        for point, weight in atoms:
            values = values + weight * g(flat_a[rows] + flat_b[rows] * point)
        out[rows] = values
    return out.reshape(a.shape)


@dataclass
class SteinSolution:
    """f_g for S_alpha(1, delta) with nu(g) precomputed"""

    g: SteinTestFn
    alpha: float
    delta: float
    nu_g: float = field(init=False)
    fd_step: float = 1e-3
    residual_tol: float = RESIDUAL_TOL

    def __post_init__(self):
        validate_alpha_delta(self.alpha, self.delta)
        tag = self.g.tag
        if tag == "call":
            self.nu_g = float(build_density_grid(self.alpha, self.delta).call(self.g.M))
        elif tag == "put":
            self.nu_g = float(build_density_grid(self.alpha, -self.delta).call(self.g.M))
        elif tag == "identity":
            self.nu_g = 0.0
        else:
            grid = build_density_grid(self.alpha, self.delta)
            self.nu_g = float(_grid_expectation(grid, self.g, np.zeros(1), np.ones(1))[0])
        if not np.isfinite(self.nu_g):
            raise InvalidParameter("nu(g) is not finite", field="g")

    def f(self, y):
        tag = self.g.tag
        if tag == "call":
            return _stein_f_call(self.g.M, self.alpha, self.delta, y)
        if tag == "put":
            # reflection y -> -y maps the delta-equation to the (-delta)-equation
            return _stein_f_call(self.g.M, self.alpha, -self.delta, -np.asarray(y, dtype=float))
        if tag == "identity":
            return _as_output(y, -self.alpha * np.atleast_1d(np.asarray(y, dtype=float)))
        return self._f_custom(y)

    def fprime(self, y):
        tag = self.g.tag
        if tag == "call":
            return stein_fprime_call(self.g.M, self.alpha, self.delta, y)
        if tag == "put":
            return -stein_fprime_call(self.g.M, self.alpha, -self.delta, -np.asarray(y, dtype=float))
        if tag == "identity":
            return _as_output(y, np.full(np.atleast_1d(y).shape, -self.alpha))
        h = 1e-4
        y = np.asarray(y, dtype=float)
        return (self._f_custom(y + h) - self._f_custom(y - h)) / (2.0 * h)

    def fsecond(self, y):
        tag = self.g.tag
        if tag == "call":
            return stein_fsecond_call(self.g.M, self.alpha, self.delta, y)
        if tag == "put":
            return stein_fsecond_call(self.g.M, self.alpha, -self.delta, -np.asarray(y, dtype=float))
        if tag == "identity":
            return _as_output(y, np.zeros(np.atleast_1d(y).shape))
        h = self.fd_step
        y = np.asarray(y, dtype=float)
        return (self.fprime(y + h) - self.fprime(y - h)) / (2.0 * h)

    def _f_custom(self, y):
        grid = build_density_grid(self.alpha, self.delta)
        u, w, wt = _u_rule(self.alpha)
        ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        out = np.empty_like(ys)
        for k, yk in enumerate(ys):
            expect = _grid_expectation(grid, self.g, u * yk, w)
            out[k] = -self.alpha * (((expect - self.nu_g) / u) @ wt)
        return _as_output(y, out)

    def generator(self, y) -> np.ndarray:
        """A f_g at y by direct quadrature"""
        span = GENERATOR_SPAN_PAD + (self.g.M or 0.0)
        ys = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        values = [
            generator_apply(self.f, self.alpha, self.delta, yk, fprime=self.fprime, fsecond=self.fsecond,
                            span=abs(yk) + span, breakpoints=self._kinks(yk))
            for yk in ys
        ]
        return _as_output(y, np.array(values))

    def _kinks(self, y: float):
        if self.g.tag == "call":
            return (self.g.M - y,)
        if self.g.tag == "put":
            return (-self.g.M - y,)
        return ()

    def residual(self, y):
        """A f_g(y) - y f'_g(y)/alpha - g(y) + nu(g)"""
        y_arr = np.asarray(y, dtype=float)
        return self.generator(y_arr) - y_arr * self.fprime(y_arr) / self.alpha - self.g(y_arr) + self.nu_g

    def residual_bound(self, y):
        return self.residual_tol * (1.0 + np.abs(self.g(np.asarray(y, dtype=float))))


def stein_solution(g: SteinTestFn, alpha: float, delta: float, y):
    """f_g(y)"""
    return SteinSolution(g, alpha, delta).f(y)


def stein_residual(g: SteinTestFn, alpha: float, delta: float, y):
    """A f_g(y) - y f'_g(y)/alpha - g(y) + nu(g)"""
    return SteinSolution(g, alpha, delta).residual(y)


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------

def _probe_growth(f: Callable, y: float):
    points = y + np.concatenate([-np.logspace(0, 6, 7), np.logspace(0, 6, 7)])
    values = np.abs(np.asarray(f(points), dtype=float)) / (1.0 + np.abs(points - y))
    if not np.all(np.isfinite(values)):
        raise DivergentInput("f is not finite on the growth probe", field="f")
    near = max(values[2], values[9])
    far = max(values[6], values[13])
    if far > 100.0 * (1.0 + near):
        raise DivergentInput(f"f grows faster than linearly (|f(x)|/|x| = {far:.3g} at distance 1e6)", field="f")


def _side_edges(span: float, horizon: float, max_panel: float, kinks) -> np.ndarray:
    inner = dyadic_edges(0.0, 1.0, int(np.ceil(np.log2(1.0 / TAYLOR_EPS))))
    inner = inner[inner >= TAYLOR_EPS * (1.0 - 1e-12)]
    inner[0] = TAYLOR_EPS
    count = max(1, int(np.ceil((span - 1.0) / max_panel)))
    uniform = np.linspace(1.0, max(span, 1.0 + max_panel), count + 1)
    top = uniform[-1]
    outer = top * np.power(2.0, np.arange(1, max(1, int(np.ceil(np.log2(horizon / top)))) + 1))
    edges = [inner, uniform[1:], outer[outer <= horizon]]
    for kink in kinks:
        if TAYLOR_EPS < kink < top:
            # graded refinement around a kink of f
            steps = np.power(2.0, -np.arange(1, 31)) * min(kink - TAYLOR_EPS, max_panel)
            edges.append(np.concatenate([kink - steps, [kink], kink + steps]))
    return np.unique(np.concatenate(edges))


def generator_apply(
    f: Callable,
    alpha: float,
    delta: float,
    y: float,
    fprime: Optional[Callable] = None,
    fsecond: Optional[Callable] = None,
    span: Optional[float] = None,
    horizon: float = GENERATOR_HORIZON,
    max_panel: float = 1.0,
    breakpoints=(),
) -> float:
    """
    A f(y) = d_alpha int [f(y+u) - f(y) - u f'(y)] k(u) du,
    k(u) = ((1+delta) 1{u>0} + (1-delta) 1{u<0}) / (2|u|^{1+alpha}).

    |u| < TAYLOR_EPS uses f''(y) u^2/2, TAYLOR_EPS <= |u| <= 1 dyadic panels,
    then uniform panels of width max_panel up to span, geometric panels up to
    horizon and a linear extrapolation of f beyond it. breakpoints are
    offsets y + u where f has a kink in its higher derivatives.
    """
    validate_alpha_delta(alpha, delta)
    y = float(y)
    _probe_growth(f, y)
    if fprime is None:
        def fprime(x, h=1e-5):
            x = np.asarray(x, dtype=float)
            step = h * np.maximum(1.0, np.abs(x))
            return (np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2.0 * step)
    if fsecond is None:
        def fsecond(x, h=1e-4):
            return (np.asarray(fprime(x + h)) - np.asarray(fprime(x - h))) / (2.0 * h)
    span = abs(y) + GENERATOR_SPAN_PAD if span is None else span

    f0 = float(np.asarray(f(y)))
    fp0 = float(np.asarray(fprime(y)))
    fpp0 = float(np.asarray(fsecond(y)))
    total = 0.0
    for side, weight in ((1.0, 1.0 + delta), (-1.0, 1.0 - delta)):
        if weight == 0.0:
            continue
        kinks = [side * k for k in breakpoints]
        edges = _side_edges(span, horizon, max_panel, kinks)
        s, ws = panel_rule(edges, order=U_ORDER)
        increments = np.asarray(f(y + side * s), dtype=float) - f0 - side * s * fp0
        body = float(increments @ (ws * s ** (-1.0 - alpha)))
        taylor = fpp0 * TAYLOR_EPS ** (2.0 - alpha) / (2.0 * (2.0 - alpha))
        # beyond the horizon f is continued linearly through its last two half-horizon values
        H = edges[-1]
        f_far = float(np.asarray(f(y + side * H)))
        f_mid = float(np.asarray(f(y + side * H / 2.0)))
        slope = (f_far - f_mid) / (H / 2.0)
        c0 = f_far - slope * H - f0
        c1 = slope - side * fp0
        tail = c0 * H ** (-alpha) / alpha + c1 * H ** (1.0 - alpha) / (alpha - 1.0)
        total += weight * (taylor + body + tail)
    return d_alpha(float(alpha)) * total / 2.0


def characteristic_exponent(alpha: float, delta: float, lam: float) -> complex:
    """psi(lambda) with A e^{i lambda y} = psi(lambda) e^{i lambda y}"""
    la = abs(lam) ** alpha
    return complex(-la, np.sign(lam) * delta * la * np.tan(np.pi * alpha / 2.0))


# ---------------------------------------------------------------------------
# Regularity audits
# ---------------------------------------------------------------------------

def second_derivative_grid_sup(g: SteinTestFn, alpha: float, delta: float, grid, h: float = 1e-3) -> float:
    """max over the grid of |f''_g| by central differences of f'_g"""
    points = np.asarray(grid, dtype=float)
    if points.size == 0 or not np.all(np.isfinite(points)):
        raise InvalidParameter("grid must be a non-empty finite array", field="grid")
    solution = SteinSolution(g, alpha, delta)
    diff = (np.asarray(solution.fprime(points + h)) - np.asarray(solution.fprime(points - h))) / (2.0 * h)
    return float(np.max(np.abs(diff)))


def fsecond_bounds(alpha: float, delta: float, M: Optional[float]) -> Dict[str, Optional[float]]:
    """4 eta_2 for any Lip(1) g; eta_3 / M^e2 for M > 2; eta_4 / M^e3 when delta = 0"""
    etas = eta_constants(alpha, delta, with_eta4=True)
    e2, e3 = m_exponents(alpha)
    nonuniform = etas.eta3 / M ** e2 if M is not None and M > 2 else None
    symmetric = etas.eta4 / M ** e3 if M is not None and M > 2 and delta == 0 else None
    return {"uniform": 4.0 * etas.eta2, "nonuniform": nonuniform, "symmetric": symmetric}


def regularity_audit(M: float, alpha: float, delta: float, y_grid=None, residual_points=(-3.0, 0.0, 3.0),
                     tol: float = 1e-6) -> Dict[str, object]:
    """f'_{g_M} range, f'' sup against its three bounds and residuals at a few points"""
    y_grid = np.linspace(-30.0, 30.0 + 2.0 * M, 1201) if y_grid is None else np.asarray(y_grid, dtype=float)
    g = SteinTestFn.call(M)
    solution = SteinSolution(g, alpha, delta)
    fprime = np.asarray(solution.fprime(y_grid))
    fsecond_sup = second_derivative_grid_sup(g, alpha, delta, y_grid)
    residuals = np.abs(np.asarray(solution.residual(np.asarray(residual_points, dtype=float))))
    limits = solution.residual_bound(np.asarray(residual_points, dtype=float))
    bounds = fsecond_bounds(alpha, delta, M)
    passes = {
        "fprime_range": bool(fprime.min() >= -alpha - tol and fprime.max() <= tol),
        "uniform": bool(fsecond_sup <= bounds["uniform"] + tol),
        "nonuniform": None if bounds["nonuniform"] is None else bool(fsecond_sup <= bounds["nonuniform"] + tol),
        "symmetric": None if bounds["symmetric"] is None else bool(fsecond_sup <= bounds["symmetric"] + tol),
        "residual": bool(np.all(residuals <= limits)),
    }
    return {
        "M": M,
        "alpha": alpha,
        "delta": delta,
        "nu_g": solution.nu_g,
        "residual_max": float(residuals.max()),
        "fprime_sup": float(np.max(np.abs(fprime))),
        "fsecond_sup": fsecond_sup,
        "bounds": bounds,
        "pass": passes,
    }


def heat_kernel_envelope_check(alpha: float, delta: float, grid=None, tol: float = 1e-7) -> Dict[str, object]:
    """
    p <= eta_1 min(1, 1/y^2) and |p'| <= eta_2 / Beta(2/a, 1-1/a) min(1, 1/y^2),
    under the signed and the |delta tan| readings of eta_1, eta_2; for
    delta = 0 also p <= prefactor * min(1, |y|^{-alpha-1}).
    """
    y = np.linspace(-50.0, 50.0, 2001) if grid is None else np.asarray(grid, dtype=float)
    p, dp = fourier_density(alpha, delta, y)
    envelope = np.minimum(1.0, 1.0 / np.maximum(y * y, 1e-300))
    beta = special.beta(2.0 / alpha, 1.0 - 1.0 / alpha)
    out: Dict[str, object] = {"alpha": alpha, "delta": delta}
    for reading, magnitude in (("signed", False), ("magnitude", True)):
        etas = eta_constants(alpha, delta, magnitude=magnitude)
        out[reading] = {
            "eta1": etas.eta1,
            "eta2": etas.eta2,
            "density_ok": bool(np.all(p <= etas.eta1 * envelope + tol)),
            "derivative_ok": bool(np.all(np.abs(dp) <= etas.eta2 / beta * envelope + tol)),
            "density_slack": float(np.min(etas.eta1 * envelope - p)),
            "derivative_slack": float(np.min(etas.eta2 / beta * envelope - np.abs(dp))),
            "warnings": etas.warnings,
        }
    if delta == 0:
        prefactor = lemma_density_prefactor(alpha)
        heavy = np.minimum(1.0, np.power(np.maximum(np.abs(y), 1e-300), -alpha - 1.0))
        out["symmetric"] = {"prefactor": prefactor, "density_ok": bool(np.all(p <= prefactor * heavy + tol))}
    return out


# ---------------------------------------------------------------------------
# Two-sided power tail law and the Taylor remainder check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailLawXtilde:
    """P(X > x) = A(1+delta)/x^alpha for x >= (2A)^{1/alpha}, mirrored with (1-delta) on the left"""

    A: float
    alpha: float
    delta: float

    def __post_init__(self):
        validate_alpha_delta(self.alpha, self.delta)
        if not self.A > 0:
            raise InvalidParameter(f"A must be positive, got {self.A}", field="A")

    @property
    def edge(self) -> float:
        return (2.0 * self.A) ** (1.0 / self.alpha)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        upper = self.A * (1.0 + self.delta) / np.maximum(x, self.edge) ** self.alpha
        lower = 1.0 - self.A * (1.0 - self.delta) / np.maximum(-x, self.edge) ** self.alpha
        return np.where(x >= self.edge, upper, np.where(x <= -self.edge, lower, (1.0 + self.delta) / 2.0))

    def quantile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        left_mass = (1.0 - self.delta) / 2.0
        tiny = np.finfo(float).tiny
        with np.errstate(divide="ignore", invalid="ignore"):
            left = -(self.A * (1.0 - self.delta) / np.maximum(u, tiny)) ** (1.0 / self.alpha)
            right = (self.A * (1.0 + self.delta) / np.maximum(1.0 - u, tiny)) ** (1.0 / self.alpha)
        return np.where(u < left_mass, left, right)


def sample_xtilde(t: TailLawXtilde, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """n i.i.d. draws of X~ by explicit inverse CDF"""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}", field="n")
    values = fill_blocks(n, seed, STREAM_XTILDE, lambda gen, size: t.quantile(gen.random(size)), threads=threads)
    return SampleBatch(values=values, seed=seed, label="xtilde", meta={"A": t.A, "alpha": t.alpha, "delta": t.delta})


@dataclass
class TaylorBound:
    case: str
    bound: float
    readings: Dict[str, float] = field(default_factory=dict)


def taylor_bound(law: AttractionLaw, M: float, a: float) -> TaylorBound:
    """Closed-form bound on the Taylor remainder T for gamma in (0, 2-alpha] or gamma = 0"""
    alpha, A, L = law.alpha, law.A, law.L
    limit = min((2.0 * A) ** (-1.0 / alpha), 1.0)
    if not 0.0 < a < limit:
        raise InvalidParameter(f"a must lie in (0, {limit:.6g}), got {a}", field="a")
    if not M > 0:
        raise InvalidParameter(f"strike M must be positive, got {M}", field="M")
    regime, _ = gamma_regime(alpha, law.gamma)
    if regime == REGIME_ABOVE:
        raise UnsupportedGamma("the Taylor remainder bound covers gamma in (0, 2-alpha] and gamma = 0", field="gamma")

    etas = eta_constants(alpha, law.delta, with_eta4=True)
    eta3, eta4 = etas.eta3, etas.eta4
    q1 = float(q_constant(alpha, A, L, eta3))
    two_a = (2.0 * A) ** (2.0 / alpha)
    e2, e3 = m_exponents(alpha)
    slow = 2.0 * (alpha - 1.0) ** 2 / (3.0 * alpha - 1.0)

    if regime == REGIME_BOUNDARY:
        first = 2.0 * alpha * two_a * eta3 / ((2.0 - alpha) * M ** e3) * a
        second = eta3 * ((2.0 * two_a + 8.0 * L / (alpha - 1.0)) + q1) * (
            2.0 * (alpha - 1.0) * a * abs(np.log(a)) * np.log(M) / ((3.0 * alpha - 1.0) * M ** e2)
        )
        return TaylorBound("i", first + second, {"linear": first, "log": second})

    gamma = float(law.gamma)
    if regime == REGIME_BETWEEN:
        value = eta3 * ((4.0 * two_a / (2.0 - alpha) + 8.0 * L / (2.0 - alpha - gamma)) + q1) * (
            a ** ((1.0 - alpha) / (gamma - 1.0)) * M ** (-slow / (1.0 - gamma))
        )
        return TaylorBound("ii", value, {"power": value})

    b_int = b_integral(law, 1.0 / a)
    b_sup = b_sup_tail(law, 1.0 / a)
    first = 2.0 * alpha * two_a * eta4 / ((2.0 - alpha) * M ** e3) * a
    third = eta3 * ((8.0 / (2.0 - alpha) + 2.0 * two_a) + q1) * a ** (alpha - 1.0) * b_sup ** (alpha - 1.0) * M ** (-slow)
    # the middle term carries (1 - gamma) in its M exponent; at gamma = 0 both readings agree
    middle_verbatim = 4.0 * eta3 * a * M ** (-slow / (1.0 - gamma)) * b_int
    middle_plain = 4.0 * eta3 * a * M ** (-slow) * b_int
    return TaylorBound(
        "iii",
        first + middle_verbatim + third,
        {"linear": first, "b_integral": middle_verbatim, "b_integral_plain": middle_plain, "b_sup": third,
         "total_plain": first + middle_plain + third},
    )


class TaylorCheck(NamedTuple):
    T_hat: float
    bound: float
    se: float


def _fprime_table(M: float, alpha: float, delta: float, reach: float = 60.0, step: float = 0.05):
    z = np.arange(-reach, reach + step / 2.0, step)
    return CubicHermiteSpline(z, stein_fprime_call(M, alpha, delta, z), stein_fsecond_call(M, alpha, delta, z)), reach


def _fprime_lookup(table, M, alpha, delta, x: np.ndarray) -> np.ndarray:
    spline, reach = table
    out = np.empty_like(x)
    inside = np.abs(x) <= reach
    out[inside] = spline(x[inside])
    if np.any(~inside):
        out[~inside] = stein_fprime_call(M, alpha, delta, x[~inside])
    return out


def taylor_remainder_check(law: AttractionLaw, M: float, a: float, mc_paths: int, seed: int,
                           threads: int = 1, draw_budget: float = DRAW_BUDGET) -> TaylorCheck:
    """
    Monte Carlo estimate of
        T = |E[X f'(Y + aX)] - E[X] E[f'(Y)] - (2 A alpha^2 / d_alpha) a^{alpha-1} E[A f(Y)]|
    with f = f_{g_M}, Y ~ S_alpha(1, delta), X ~ law, all three terms on the same draws.
    A f(Y) is taken from the Stein equation: Y f'(Y)/alpha + g_M(Y) - nu(g_M).
    """
    if mc_paths < 2:
        raise InvalidParameter(f"mc_paths must be >= 2, got {mc_paths}", field="mc_paths")
    if 2.0 * mc_paths > draw_budget:
        raise BudgetExceeded(f"{2 * mc_paths} draws exceed the budget {draw_budget:g}", field="mc_paths")
    bound = taylor_bound(law, M, a)
    alpha, delta = law.alpha, law.delta
    x = sample_attraction(law, mc_paths, seed, threads=threads).values
    y = sample(StableParams(alpha, 1.0, delta), mc_paths, seed, threads=threads, stream=STREAM_TAYLOR).values
    table = _fprime_table(M, alpha, delta)
    fp_shift = _fprime_lookup(table, M, alpha, delta, y + a * x)
    fp_y = _fprime_lookup(table, M, alpha, delta, y)
    nu = float(build_density_grid(float(alpha), float(delta)).call(M))
    generator_y = y * fp_y / alpha + np.maximum(y - M, 0.0) - nu
    kappa = 2.0 * law.A * alpha ** 2 / d_alpha(float(alpha))
    z = x * fp_shift - checked_mean(law) * fp_y - kappa * a ** (alpha - 1.0) * generator_y
    return TaylorCheck(float(abs(z.mean())), float(bound.bound), float(z.std(ddof=1) / np.sqrt(mc_paths)))
