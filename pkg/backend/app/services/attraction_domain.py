#!/usr/bin/env python3
"""
Attraction domain: laws of the form
  F(x) = 1 - (A + B(x))(1 + delta)/|x|^alpha   (x >= 0)
  F(x) = (A + B(x))(1 - delta)/|x|^alpha       (x < 0)
with |B(x)| <= L/|x|^gamma, their samplers, moments and normalized sums S_n
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate, optimize

from app.config import BISECTION_MAX_ITER, BISECTION_TOL, DRAW_BUDGET
from app.errors import BudgetExceeded, InvalidLaw, InvalidParameter, NonConvergence
from app.services.rng import STREAM_ATTRACTION, STREAM_SN, fill_blocks
from app.services.sample_io import SampleBatch
from app.services.stable_dist import d_alpha, validate_alpha_delta
from app.utils.quadrature import quad_panels

Gamma = Union[float, Fraction]
ArrayFn = Callable[[np.ndarray], np.ndarray]

# Probe grid used for the monotonicity and |B| <= L/|x|^gamma checks
_PROBE_HALF = np.geomspace(1e-3, 1e6, 5000)
PROBE_GRID = np.concatenate([-_PROBE_HALF[::-1], _PROBE_HALF])

# Largest row count of an S_n block (paths x n draws held at once)
_SN_CELLS = 1 << 21


@dataclass(eq=False)
class AttractionLaw:
    """
    A law in the domain of normal attraction.

    Either B or F must be given; when both are present F is used for
    evaluation and B only for the gamma / L classification. `inverse` is an
    explicit quantile function when one is known; otherwise sampling falls
    back to bisection on F. `breakpoints` are kinks of F used to split
    quadrature panels.
    """

    alpha: float
    A: float
    delta: float
    gamma: Gamma
    L: float
    B: Optional[ArrayFn] = None
    F: Optional[ArrayFn] = None
    name: str = "custom"
    inverse: Optional[ArrayFn] = None
    breakpoints: Tuple[float, ...] = ()
    mean_closed: Optional[float] = None
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        validate_alpha_delta(self.alpha, self.delta)
        if not self.A > 0:
            raise InvalidParameter(f"A must be positive, got {self.A}", field="A")
        if not self.L > 0:
            raise InvalidParameter(f"L must be positive, got {self.L}", field="L")
        if not float(self.gamma) >= 0:
            raise InvalidParameter(f"gamma must be >= 0, got {self.gamma}", field="gamma")
        if self.B is None and self.F is None:
            raise InvalidLaw("a law needs B(x) or F(x)")
        self._probe()

    def _probe(self):
        values = self.cdf(PROBE_GRID)
        if np.any(~np.isfinite(values)) or values.min() < -1e-12 or values.max() > 1.0 + 1e-12:
            raise InvalidLaw(f"{self.name}: F leaves [0,1] on the probe grid")
        if np.any(np.diff(values) < -1e-12):
            where = PROBE_GRID[1:][np.diff(values) < -1e-12][0]
            raise InvalidLaw(f"{self.name}: F decreases near x={where:.4g}")
        if self.cdf(np.array([-1e12]))[0] > 1e-6 or self.cdf(np.array([1e12]))[0] < 1.0 - 1e-6:
            raise InvalidLaw(f"{self.name}: F does not reach 0 and 1 at -inf / +inf")
        if self.B is not None:
            envelope = self.L / np.abs(PROBE_GRID) ** float(self.gamma)
            excess = np.abs(self.B(PROBE_GRID)) - envelope * (1.0 + 1e-9) - 1e-12
            if np.any(excess > 0):
                where = PROBE_GRID[excess > 0][0]
                raise InvalidLaw(f"{self.name}: |B(x)| > L/|x|^gamma at x={where:.4g}")

    def b(self, x: np.ndarray) -> np.ndarray:
        """B(x), derived from F when only F was supplied"""
        x = np.asarray(x, dtype=float)
        if self.B is not None:
            return self.B(x)
        ax = np.abs(x) ** self.alpha
        with np.errstate(divide="ignore", invalid="ignore"):
            right = (1.0 - self.F(x)) * ax / (1.0 + self.delta) - self.A
            left = self.F(x) * ax / (1.0 - self.delta) - self.A
        return np.where(x >= 0, right, left)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.F is not None:
            return np.clip(self.F(x), 0.0, 1.0)
        # right-continuous value at the origin
        xs = np.where(x == 0.0, np.finfo(float).tiny, x)
        scaled = (self.A + self.B(xs)) / np.abs(xs) ** self.alpha
        return np.clip(np.where(xs >= 0, 1.0 - scaled * (1.0 + self.delta), scaled * (1.0 - self.delta)), 0.0, 1.0)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.inverse is not None:
            return self.inverse(u)
        return bisect_inverse(self.cdf, u)


def bisect_inverse(cdf: ArrayFn, u: np.ndarray) -> np.ndarray:
    """Vectorized generalized inverse inf{x : F(x) >= u} by bisection"""
    lo = np.full_like(u, -1.0)
    hi = np.full_like(u, 1.0)
    for _ in range(1100):
        low_side = cdf(lo) >= u
        high_side = cdf(hi) < u
        if not (low_side.any() or high_side.any()):
            break
        lo[low_side] *= 2.0
        hi[high_side] *= 2.0
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        above = cdf(mid) >= u
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(cdf(hi) - cdf(lo) <= BISECTION_TOL) and np.all(hi - lo <= 1e-13 * np.maximum(1.0, np.abs(hi))):
            break
    return hi


def cdf_attraction(law: AttractionLaw, x):
    """F_X(x); scalar in, scalar out"""
    values = law.cdf(np.atleast_1d(np.asarray(x, dtype=float)))
    return float(values[0]) if np.ndim(x) == 0 else values


def sample_attraction(law: AttractionLaw, n: int, seed: int, threads: int = 1) -> SampleBatch:
    """n i.i.d. draws of the law by inverse CDF"""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}", field="n")
    values = fill_blocks(n, seed, STREAM_ATTRACTION, lambda gen, size: law.quantile(gen.random(size)), threads=threads)
    return SampleBatch(values=values, seed=seed, label=law.name, meta={"alpha": law.alpha, "delta": law.delta})


# ---------------------------------------------------------------------------
# Normalization and moments
# ---------------------------------------------------------------------------

def sigma_norm(law: AttractionLaw) -> Tuple[float, float]:
    """(sigma, d_alpha) with sigma^alpha = A alpha int (1 - cos y)/|y|^{1+alpha} dy = 2 A alpha / d_alpha"""
    d = d_alpha(float(law.alpha))
    sigma = (2.0 * law.A * law.alpha / d) ** (1.0 / law.alpha)
    return float(sigma), d


def _side_integral(law: AttractionLaw, side: int, shift: float, q: float) -> float:
    """
    int_shift^inf q (x - shift)^{q-1} S(x) dx with S(x) = P(side * X > x).

    For x > 0, S(x) = w (A + B(side x)) x^-alpha with w = 1 + side delta; the
    A x^-alpha part beyond the cut is integrated in closed form.
    """
    w = 1.0 + side * law.delta

    def survival(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return 1.0 - law.cdf(x) if side > 0 else law.cdf(-x)

    scale = max([1.0, abs(shift)] + [abs(b) for b in law.breakpoints])
    cut = max(shift, 0.0) + 4.0 * scale
    inner = sorted({float(b) for b in law.breakpoints} | {0.0, scale})
    edges = [shift] + [b for b in inner if shift < b < cut] + [cut]

    def finite(t, weighted):
        value = q * survival(t)[0]
        return value if weighted else value * (t - shift) ** (q - 1.0)

    head, _ = quad_panels(finite, np.array(edges), epsabs=1e-13, epsrel=1e-11, first_weight=("alg", (q - 1.0, 0.0)))
    if w == 0.0:
        return float(head)

    closed = law.A * q * cut ** (q - law.alpha) / (law.alpha - q)

    def remainder(x):
        return w * (q * (x - shift) ** (q - 1.0) * (law.A + law.b(np.array([side * x]))[0]) - law.A * q * x ** (q - 1.0)) * x ** (-law.alpha)

    rest, err, *info = integrate.quad(remainder, cut, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400, full_output=1)
    if info and len(info) > 1 and err > 1e-8:
        raise NonConvergence(f"tail moment quadrature failed: {info[1]}")
    return float(head + w * closed + rest)


@lru_cache(maxsize=64)
def mean_and_fractional_moments(law: AttractionLaw) -> Tuple[float, float, float]:
    """(E X, E|X|, E|X - E X|^{2 - alpha}) by survival-function quadrature"""
    up1 = _side_integral(law, +1, 0.0, 1.0)
    down1 = _side_integral(law, -1, 0.0, 1.0)
    mean = up1 - down1
    q = 2.0 - law.alpha
    frac = _side_integral(law, +1, mean, q) + _side_integral(law, -1, -mean, q)
    return float(mean), float(up1 + down1), float(frac)


def checked_mean(law: AttractionLaw) -> float:
    mean = mean_and_fractional_moments(law)[0]
    if law.mean_closed is not None and abs(mean - law.mean_closed) > 1e-8:
        raise NonConvergence(f"{law.name}: numerical mean {mean!r} vs closed form {law.mean_closed!r}")
    return mean


# ---------------------------------------------------------------------------
# Normalized sums
# ---------------------------------------------------------------------------

@dataclass
class SnConfig:
    """paths realizations of S_n = (sigma n^{1/alpha})^{-1} sum (X_i - E X_i)"""

    law: AttractionLaw
    n: int
    paths: int
    seed: int
    draw_budget: float = DRAW_BUDGET
    threads: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter(f"n must be >= 1, got {self.n}", field="n")
        if self.paths < 1:
            raise InvalidParameter(f"paths must be >= 1, got {self.paths}", field="paths")
        if float(self.n) * float(self.paths) > self.draw_budget:
            raise BudgetExceeded(
                f"n*paths = {float(self.n) * float(self.paths):.3g} exceeds the draw budget {self.draw_budget:.3g}",
                field="paths",
            )


def build_Sn(cfg: SnConfig) -> SampleBatch:
    """Deterministic per (seed, n, paths) whatever cfg.threads is"""
    law = cfg.law
    sigma, _ = sigma_norm(law)
    mean = checked_mean(law)
    norm = sigma * cfg.n ** (1.0 / law.alpha)
    block = max(1, min(1 << 16, _SN_CELLS // cfg.n))

    def draw(gen: np.random.Generator, size: int) -> np.ndarray:
        sums = np.zeros(size)
        rows = max(1, _SN_CELLS // cfg.n)
        for start in range(0, size, rows):
            stop = min(start + rows, size)
            x = law.quantile(gen.random((stop - start, cfg.n)))
            sums[start:stop] = (x - mean).sum(axis=1)
        return sums / norm

    values = fill_blocks(cfg.paths, cfg.seed, STREAM_SN + (cfg.n << 8), draw, threads=cfg.threads, block_size=block)
    return SampleBatch(
        values=values,
        seed=cfg.seed,
        label=f"S_n{cfg.n}_{law.name}",
        meta={"n": cfg.n, "paths": cfg.paths, "sigma": sigma, "mean": mean},
    )


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _flat_inner_b(alpha: float, A: float) -> ArrayFn:
    """B on the flat part of F, where (A + B)/|x|^alpha = 1/2"""
    return lambda x: np.abs(x) ** alpha / 2.0 - A


def pareto_preset(alpha: float, delta: float = 0.0) -> AttractionLaw:
    """Density alpha (1 +- delta) / (2 |x|^{alpha+1}) on |x| >= 1"""
    validate_alpha_delta(alpha, delta)
    A = 0.5

    def B(x):
        ax = np.abs(x)
        return np.where(ax <= 1.0, (ax ** alpha - 1.0) / 2.0, 0.0)

    def F(x):
        ax = np.maximum(np.abs(x), 1.0)
        return np.where(
            x >= 1.0, 1.0 - (1.0 + delta) / (2.0 * ax ** alpha),
            np.where(x <= -1.0, (1.0 - delta) / (2.0 * ax ** alpha), (1.0 - delta) / 2.0),
        )

    def inverse(u):
        u = np.maximum(u, np.finfo(float).tiny)
        lower = u < (1.0 - delta) / 2.0
        out = np.empty_like(u)
        with np.errstate(divide="ignore"):
            out[lower] = -((1.0 - delta) / (2.0 * u[lower])) ** (1.0 / alpha)
            out[~lower] = ((1.0 + delta) / (2.0 * (1.0 - u[~lower]))) ** (1.0 / alpha)
        return out

    return AttractionLaw(
        alpha=alpha, A=A, delta=delta, gamma=2, L=0.5, B=B, F=F, name="pareto",
        inverse=inverse, breakpoints=(-1.0, 1.0), mean_closed=delta * alpha / (alpha - 1.0),
    )


def _perturbed(alpha: float, delta: float, A: float, tail_b: ArrayFn, x0: float, name: str,
               gamma: Gamma, L: float, params: Dict[str, float]) -> AttractionLaw:
    inner_b = _flat_inner_b(alpha, A)

    def B(x):
        ax = np.abs(x)
        return np.where(ax < x0, inner_b(x), tail_b(np.maximum(ax, x0)))

    def F(x):
        ax = np.maximum(np.abs(x), x0)
        tail = (A + tail_b(ax)) / ax ** alpha
        return np.where(
            x >= x0, 1.0 - (1.0 + delta) * tail,
            np.where(x <= -x0, (1.0 - delta) * tail, (1.0 - delta) / 2.0),
        )

    return AttractionLaw(
        alpha=alpha, A=A, delta=delta, gamma=gamma, L=L, B=B, F=F, name=name,
        breakpoints=(-x0, x0), params=params,
    )


def _junction(fn: Callable[[float], float], lo: float, name: str) -> float:
    try:
        return optimize.brentq(fn, lo, 1e6, xtol=1e-15, rtol=1e-15)
    except ValueError:
        raise InvalidLaw(f"{name}: no junction x0 where the tail reaches F = 1/2; adjust A or c") from None


def perturbed_pareto_preset(alpha: float, gamma: Gamma, c: float, delta: float = 0.0, A: float = 0.5) -> AttractionLaw:
    """
    B(x) = c |x|^-gamma beyond the junction x0 where A x0^-alpha + c x0^{-alpha-gamma} = 1/2,
    flat F on (-x0, x0). gamma = 2 - alpha gives the boundary regime.
    """
    validate_alpha_delta(alpha, delta)
    g = float(gamma)
    if not g > 0:
        raise InvalidParameter("perturbed Pareto needs gamma > 0", field="gamma")
    if not A > 0:
        raise InvalidParameter(f"A must be positive, got {A}", field="A")
    x0 = _junction(lambda x: A * x ** -alpha + c * x ** (-alpha - g) - 0.5, 1e-6, "perturbed_pareto")
    # sup |B(x)| |x|^gamma: |c| at and beyond x0; the flat part peaks at x^alpha = 2 A gamma/(alpha+gamma)
    x_star = (2.0 * A * g / (alpha + g)) ** (1.0 / alpha)
    inner = A * (alpha / (alpha + g)) * x_star ** g if x_star < x0 else 0.0
    L = max(abs(c), inner)
    return _perturbed(
        alpha, delta, A, lambda ax: c * ax ** -g, x0, "perturbed_pareto", gamma, L,
        {"c": c, "x0": x0},
    )


def log_perturbed_preset(alpha: float, c: float, delta: float = 0.0, A: float = 0.5) -> AttractionLaw:
    """gamma = 0 law: B(x) = c / (1 + log|x|) beyond x0 >= 1"""
    validate_alpha_delta(alpha, delta)
    if not c > 0:
        raise InvalidParameter("log-perturbed law needs c > 0", field="c")
    if not A > 0:
        raise InvalidParameter(f"A must be positive, got {A}", field="A")
    x0 = _junction(lambda x: (A + c / (1.0 + np.log(x))) * x ** -alpha - 0.5, 1.0, "log_perturbed")
    # B runs from -A at the origin up to c at x0, then decays
    L = max(c, A)
    return _perturbed(
        alpha, delta, A, lambda ax: c / (1.0 + np.log(ax)), x0, "log_perturbed", 0, L,
        {"c": c, "x0": x0},
    )


PRESETS = {
    "pareto": pareto_preset,
    "perturbed_pareto": perturbed_pareto_preset,
    "log_perturbed": log_perturbed_preset,
}


def _reject(name: str, **options) -> None:
    for key, value in options.items():
        if value is not None:
            raise InvalidParameter(f"{key} does not apply to the {name} preset", field=key)


def preset_law(name: str, alpha: float, delta: float = 0.0, gamma: Optional[Gamma] = None, c: Optional[float] = None,
               A: Optional[float] = None, L: Optional[float] = None) -> AttractionLaw:
    """
    Build a shipped preset by name. Options a preset does not take are
    rejected; L replaces the derived envelope constant and is re-checked.
    """
    if name == "pareto":
        _reject(name, gamma=gamma, c=c, A=A)
        law = pareto_preset(alpha, delta)
    elif name == "perturbed_pareto":
        law = perturbed_pareto_preset(alpha, Fraction(2) - Fraction(str(alpha)) if gamma is None else gamma,
                                      0.25 if c is None else c, delta, 0.5 if A is None else A)
    elif name == "log_perturbed":
        if gamma is not None and float(gamma) != 0.0:
            raise InvalidParameter(f"log_perturbed has gamma = 0, got {gamma}", field="gamma")
        law = log_perturbed_preset(alpha, 0.25 if c is None else c, delta, 0.5 if A is None else A)
    else:
        raise InvalidParameter(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", field="preset")
    if L is not None and L != law.L:
        law = replace(law, L=float(L))
    return law


# ---------------------------------------------------------------------------
# gamma = 0 inputs
# ---------------------------------------------------------------------------

def b_integral(law: AttractionLaw, s: float) -> float:
    """int_{-s}^{s} |B(x)| / |x|^{alpha-1} dx"""
    if not s > 0:
        raise InvalidParameter("integration half-width must be positive", field="s")
    total = 0.0
    for side in (+1, -1):
        kinks = sorted({abs(b) for b in law.breakpoints if 0 < abs(b) < s} | {min(1.0, s), s})
        edges = np.array([0.0] + kinks)

        def integrand(t, weighted, side=side):
            value = abs(float(law.b(np.array([side * t]))[0]))
            return value if weighted else value * t ** (1.0 - law.alpha)

        part, _ = quad_panels(integrand, edges, epsabs=1e-12, epsrel=1e-10, first_weight=("alg", (1.0 - law.alpha, 0.0)))
        total += part
    return float(total)


def b_sup_tail(law: AttractionLaw, s: float) -> float:
    """sup_{|x| >= s} |B(x)| over a geometric probe"""
    if not s > 0:
        raise InvalidParameter("tail threshold must be positive", field="s")
    probe = np.geomspace(s, s * 1e8, 4000)
    return float(max(np.abs(law.b(probe)).max(), np.abs(law.b(-probe)).max()))
