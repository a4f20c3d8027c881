#!/usr/bin/env python3
"""
Bounds: heat-kernel constants eta_1..eta_4, q_1/q_2, the rate R_n by gamma
regime, c_1 / c_{2,M} / c_{3,M} and the assembled uniform / non-uniform report.

Every expression is evaluated as printed, in mpmath at 40 digits, with the
signed tan(pi alpha / 2) (negative on (1,2)). Non-positive max branches are
reported as warnings instead of being clamped.
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import mpmath as mp

from app.errors import InvalidParameter, MissingBData
from app.services.attraction_domain import (
    AttractionLaw,
    b_integral,
    b_sup_tail,
    mean_and_fractional_moments,
    sigma_norm,
)
from app.services.stable_dist import validate_alpha_delta

mp.mp.dps = 40

REGIME_ABOVE = "γ>2−α"
REGIME_BOUNDARY = "γ=2−α"
REGIME_BETWEEN = "0<γ<2−α"
REGIME_ZERO = "γ=0"

BOUNDARY_ATOL = 1e-12


@dataclass
class EtaConstants:
    eta1: float
    eta2: float
    eta3: float
    eta4: Optional[float] = None
    warnings: List[str] = field(default_factory=list)


def _tan_term(alpha, delta, magnitude: bool):
    t = mp.mpf(delta) * mp.tan(mp.pi * alpha / 2)
    return abs(t) if magnitude else t


def _improvement_factor(alpha):
    """(4 alpha + 2 alpha^{(2 alpha - 2)/alpha} - 1) / (alpha - 1)"""
    return (4 * alpha + 2 * alpha ** ((2 * alpha - 2) / alpha) - 1) / (alpha - 1)


def eta4_mp(alpha) -> mp.mpf:
    alpha = mp.mpf(alpha)
    prefactor = max(
        mp.gamma(1 / alpha) / alpha,
        alpha * 2 ** (alpha - 1) * mp.sin(alpha * mp.pi / 2) * mp.gamma((1 + alpha) / 2) * mp.gamma(alpha / 2) / mp.pi ** 1.5,
    )
    return prefactor * _improvement_factor(alpha)


def lemma_density_prefactor(alpha: float) -> float:
    """max{Gamma(1/a)/a, a 2^{a-1} sin(a pi/2) Gamma((1+a)/2) Gamma(a/2) / pi^{3/2}}"""
    return float(eta4_mp(alpha) / _improvement_factor(mp.mpf(alpha)))


def eta_constants(alpha: float, delta: float, with_eta4: bool = False, magnitude: bool = False) -> EtaConstants:
    """
    eta_1, eta_2 (heat-kernel envelopes), eta_3 = improvement * eta_1, and
    eta_4 when requested. magnitude=True replaces delta tan(pi alpha/2) by its
    absolute value (the reading under which the envelopes hold for delta > 0).
    """
    validate_alpha_delta(alpha, delta)
    a = mp.mpf(alpha)
    t = _tan_term(a, delta, magnitude)
    warnings = []

    branch1 = (a - 1) * (1 + t) * (2 + t) * mp.gamma((a - 1) / a) / mp.pi
    if branch1 <= 0:
        warnings.append(f"eta1: second max branch is non-positive ({mp.nstr(branch1, 8)})")
    eta1 = max(mp.gamma(1 / a) / (mp.pi * a), branch1)

    branch2 = (1 + t) * (1 + 2 * a + a * t) / mp.pi
    if branch2 <= 0:
        warnings.append(f"eta2: second max branch is non-positive ({mp.nstr(branch2, 8)})")
    eta2 = mp.beta(2 / a, 1 - 1 / a) * max(mp.gamma(2 / a) / (mp.pi * a), branch2)

    eta3 = _improvement_factor(a) * eta1
    eta4 = float(eta4_mp(a)) if with_eta4 else None
    return EtaConstants(float(eta1), float(eta2), float(eta3), eta4, warnings)


def exponent_gap(alpha: float) -> float:
    """(alpha^2-1)/(alpha^2+2alpha-1) - 2(alpha-1)/(3alpha-1) = (alpha-1)^3 / ((alpha^2+2alpha-1)(3alpha-1))"""
    a = mp.mpf(alpha)
    return float((a - 1) ** 3 / ((a ** 2 + 2 * a - 1) * (3 * a - 1)))


def m_exponents(alpha: float) -> Tuple[float, float]:
    """Decay orders of f'' in M: (2(a-1)/(3a-1), (a^2-1)/(a^2+2a-1))"""
    a = mp.mpf(alpha)
    return float(2 * (a - 1) / (3 * a - 1)), float((a ** 2 - 1) / (a ** 2 + 2 * a - 1))


def gamma_regime(alpha: float, gamma) -> Tuple[str, Optional[str]]:
    """
    Regime tag of gamma relative to 2 - alpha. Fractions compare exactly
    (alpha is read through its decimal representation); floats within 1e-12
    of 2 - alpha are treated as the boundary, with a note.
    """
    if isinstance(gamma, Fraction):
        g = gamma
        if g < 0:
            raise InvalidParameter(f"gamma must be >= 0, got {gamma}", field="gamma")
        edge = 2 - Fraction(str(alpha))
        if g == 0:
            return REGIME_ZERO, None
        if g == edge:
            return REGIME_BOUNDARY, None
        return (REGIME_ABOVE if g > edge else REGIME_BETWEEN), None

    g = float(gamma)
    if g < 0:
        raise InvalidParameter(f"gamma must be >= 0, got {gamma}", field="gamma")
    if g == 0.0:
        return REGIME_ZERO, None
    edge = 2.0 - float(alpha)
    if abs(g - edge) <= BOUNDARY_ATOL:
        note = None if g == edge else f"gamma={g!r} within {BOUNDARY_ATOL:g} of 2-alpha, treated as the boundary case"
        return REGIME_BOUNDARY, note
    return (REGIME_ABOVE if g > edge else REGIME_BETWEEN), None


def _rate(alpha, gamma, sigma, n, regime, B_integral, B_sup_tail):
    a, s, n = mp.mpf(alpha), mp.mpf(sigma), mp.mpf(n)
    base = n ** (1 - 2 / a)
    if regime == REGIME_ABOVE:
        return base
    if regime == REGIME_BOUNDARY:
        return base * abs(mp.log(s * n ** (1 / a)))
    if regime == REGIME_BETWEEN:
        g = mp.mpf(float(gamma))
        return n ** (-(a - 1) * g / (a * (1 - g)))
    if B_integral is None or B_sup_tail is None:
        raise MissingBData("gamma=0 needs B_integral and B_sup_tail", field="B_integral" if B_integral is None else "B_sup_tail")
    return base + base * mp.mpf(B_integral) + mp.mpf(B_sup_tail) ** (a - 1)


def rate_Rn(alpha: float, gamma, sigma: float, n: int,
            B_integral: Optional[float] = None, B_sup_tail: Optional[float] = None) -> float:
    """R_n for the regime of gamma"""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}", field="n")
    regime, _ = gamma_regime(alpha, gamma)
    return float(_rate(alpha, gamma, sigma, n, regime, B_integral, B_sup_tail))


def rate_regime_sides(alpha: float, sigma: float, n: int, eps: float = 1e-6) -> Dict[str, float]:
    """R_n just below, at and just above gamma = 2 - alpha (no continuity is implied)"""
    edge = 2.0 - alpha
    return OrderedDict(
        below=rate_Rn(alpha, edge - eps, sigma, n),
        boundary=rate_Rn(alpha, Fraction(2) - Fraction(str(alpha)), sigma, n),
        above=rate_Rn(alpha, edge + eps, sigma, n),
    )


# ---------------------------------------------------------------------------
# Inputs and constants
# ---------------------------------------------------------------------------

@dataclass
class BoundInputs:
    """Every symbol entering c_1, c_{2,M}, c_{3,M} and R_n"""

    law: AttractionLaw
    n: int
    moments: Tuple[float, float, float]
    sigma: float
    d_alpha: float
    M: Optional[float] = None
    B_integral: Optional[float] = None
    B_sup_tail: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameter(f"n must be >= 1, got {self.n}", field="n")
        if self.M is not None and not self.M > 0:
            raise InvalidParameter(f"strike M must be positive, got {self.M}", field="M")
        self.regime, self.regime_note = gamma_regime(self.law.alpha, self.law.gamma)
        if self.regime == REGIME_ZERO and (self.B_integral is None or self.B_sup_tail is None):
            raise MissingBData(
                "gamma=0 needs B_integral and B_sup_tail",
                field="B_integral" if self.B_integral is None else "B_sup_tail",
            )


def bound_inputs_for(law: AttractionLaw, n: int, M: Optional[float] = None) -> BoundInputs:
    """Compute sigma, d_alpha, moments and (gamma=0) the B functionals for a law"""
    sigma, d = sigma_norm(law)
    moments = mean_and_fractional_moments(law)
    b_int = b_sup = None
    if gamma_regime(law.alpha, law.gamma)[0] == REGIME_ZERO:
        s = sigma * n ** (1.0 / law.alpha)
        b_int, b_sup = b_integral(law, s), b_sup_tail(law, s)
    return BoundInputs(law=law, n=n, moments=moments, sigma=sigma, d_alpha=d, M=M, B_integral=b_int, B_sup_tail=b_sup)


def _symbols(inputs: BoundInputs):
    law = inputs.law
    return (
        mp.mpf(law.alpha), mp.mpf(law.A), mp.mpf(law.L), mp.mpf(float(law.gamma)),
        mp.mpf(inputs.sigma), mp.mpf(inputs.d_alpha),
        [mp.mpf(m) for m in inputs.moments],
    )


def _c1_terms(inputs: BoundInputs) -> "OrderedDict[str, mp.mpf]":
    a, A, L, g, s, d, (mean, abs_mean, frac) = _symbols(inputs)
    eta2 = mp.mpf(eta_constants(inputs.law.alpha, inputs.law.delta).eta2)
    two_a = (2 * A) ** (2 / a)
    terms = OrderedDict()
    terms["moment"] = (16 * d * frac / ((2 - a) * (a - 1) * s ** (2 - a)) + 12 * abs_mean * abs(mean) / s ** 2) * eta2
    regime = inputs.regime
    if regime == REGIME_ABOVE:
        terms["regime"] = 8 * two_a / s ** 2 * (2 / (2 - a) + 2 * L / (a + g - 2) * (2 * A) ** (-(a + g) / a)) * eta2
    elif regime == REGIME_BOUNDARY:
        terms["regime"] = (4 * (4 * two_a / (2 - a) + 8 * L / (a - 1)) * eta2 + (8 * a ** 2 * (A + L) - 4 * L) / (a - 1)) / s ** 2
    elif regime == REGIME_BETWEEN:
        terms["regime"] = s ** ((a - g) / (g - 1)) * (
            4 * (4 * two_a / (2 - a) + 8 * L / (2 - a - g)) * eta2 + (8 * a ** 2 * (A + L) - 4 * L) / (a - 1)
        )
    else:
        terms["regime"] = 4 * max(
            2 * a * two_a / ((2 - a) * s ** 2),
            4 / s ** 2,
            8 / ((2 - a) * s ** a) + 2 * two_a / s ** a + (8 * a ** 2 * (A + L) - 4 * L) / (4 * (a - 1) * eta2 * s ** a),
        ) * eta2
    return terms


def const_c1(inputs: BoundInputs) -> float:
    """Uniform constant c_1 for the regime of the law's gamma"""
    return float(sum(_c1_terms(inputs).values()))


def q_constant(alpha, A, L, eta):
    return (8 * alpha ** 2 * (A + L) - 4 * alpha * L) / ((alpha - 1) * eta)


def _nonuniform_terms(inputs: BoundInputs, eta, exponent, between_exponent, zero_exponent, log_factor):
    """Shared shape of c_{2,M} (eta_3) and c_{3,M} (eta_4)"""
    a, A, L, g, s, d, (mean, abs_mean, frac) = _symbols(inputs)
    M = mp.mpf(inputs.M)
    two_a = (2 * A) ** (2 / a)
    q = q_constant(a, A, L, eta)
    decay = M ** (-exponent)
    terms = OrderedDict()
    terms["moment"] = (4 * d * frac / ((2 - a) * (a - 1) * s ** (2 - a)) + 3 * abs_mean * abs(mean) / s ** 2) * eta * decay
    regime = inputs.regime
    if regime == REGIME_ABOVE:
        body = 2 * two_a / s ** 2 * (2 / (2 - a) + 2 * L / (a + g - 2) * (2 * A) ** (-(a + g) / a)) * decay
    elif regime == REGIME_BOUNDARY:
        body = ((4 * two_a / (2 - a) + 8 * L / (a - 1)) + q) / s ** 2 * log_factor * mp.log(M) * decay
    elif regime == REGIME_BETWEEN:
        body = s ** ((a - g) / (g - 1)) * ((4 * two_a / (2 - a) + 8 * L / (2 - a - g)) + q) * M ** (-between_exponent(g))
    else:
        body = max(
            2 * a * two_a / ((2 - a) * s ** 2),
            4 / s ** 2,
            8 / ((2 - a) * s ** a) + 2 * two_a / s ** a + q,
        ) * M ** (-zero_exponent)
    terms["regime"] = eta * body
    return terms, q


def _c2M_terms(inputs: BoundInputs):
    a = mp.mpf(inputs.law.alpha)
    eta3 = mp.mpf(eta_constants(inputs.law.alpha, inputs.law.delta).eta3)
    return _nonuniform_terms(
        inputs, eta3,
        exponent=2 * (a - 1) / (3 * a - 1),
        between_exponent=lambda g: 2 * (a - 1) ** 2 / ((3 * a - 1) * (1 - g)),
        zero_exponent=2 * (a - 1) ** 2 / (3 * a - 1),
        log_factor=2 * (a - 1) / (3 * a - 1),
    )


def _c3M_terms(inputs: BoundInputs):
    a = mp.mpf(inputs.law.alpha)
    eta4 = eta4_mp(a)
    e3 = (a ** 2 - 1) / (a ** 2 + 2 * a - 1)
    return _nonuniform_terms(
        inputs, eta4,
        exponent=e3,
        between_exponent=lambda g: e3 * (a - 1) / (1 - g),
        zero_exponent=e3 * (a - 1),
        log_factor=e3,
    )


def const_c2M_c3M(inputs: BoundInputs) -> Tuple[float, Optional[float]]:
    """(c_{2,M}, c_{3,M}); c_{3,M} only for delta = 0"""
    if inputs.M is None:
        raise InvalidParameter("the non-uniform constants need a strike M", field="M")
    c2M = float(sum(_c2M_terms(inputs)[0].values()))
    c3M = float(sum(_c3M_terms(inputs)[0].values())) if inputs.law.delta == 0 else None
    return c2M, c3M


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class BoundReport:
    """Constants, rate and bounds; to_dict() keeps the documented key order"""

    eta1: float
    eta2: float
    eta3: float
    eta4: Optional[float]
    q1: Optional[float]
    q2: Optional[float]
    Rn: float
    c1: float
    c2M: Optional[float]
    c3M: Optional[float]
    uniform_bound: float
    nonuniform_bound: Optional[float]
    regime: str
    nonuniform_source: Optional[str] = None
    sigma: float = 0.0
    d_alpha: float = 0.0
    moments: Dict[str, float] = field(default_factory=dict)
    terms: Dict[str, Dict[str, float]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    KEY_ORDER = (
        "eta1", "eta2", "eta3", "eta4", "q1", "q2", "Rn", "c1", "c2M", "c3M",
        "uniform_bound", "nonuniform_bound", "regime", "nonuniform_source",
        "sigma", "d_alpha", "moments", "terms", "warnings", "notes",
    )

    def to_dict(self) -> "OrderedDict[str, object]":
        return OrderedDict((key, getattr(self, key)) for key in self.KEY_ORDER)


def assemble_report(inputs: BoundInputs) -> BoundReport:
    """uniform = c_1 R_n; nonuniform = min(c_{2,M}, c_{3,M} when delta = 0) R_n"""
    law = inputs.law
    etas = eta_constants(law.alpha, law.delta, with_eta4=True)
    Rn = float(_rate(law.alpha, law.gamma, inputs.sigma, inputs.n, inputs.regime, inputs.B_integral, inputs.B_sup_tail))
    c1_terms = _c1_terms(inputs)
    c1 = float(sum(c1_terms.values()))
    warnings = list(etas.warnings)
    notes = [inputs.regime_note] if inputs.regime_note else []

    terms = {"c1": {k: float(v) for k, v in c1_terms.items()}}
    c2M = c3M = q1 = q2 = nonuniform = source = None
    if inputs.M is not None:
        t2, q1_mp = _c2M_terms(inputs)
        c2M, q1 = float(sum(t2.values())), float(q1_mp)
        terms["c2M"] = {k: float(v) for k, v in t2.items()}
        nonuniform, source = c2M * Rn, "c2M"
        if law.delta == 0:
            t3, q2_mp = _c3M_terms(inputs)
            c3M, q2 = float(sum(t3.values())), float(q2_mp)
            terms["c3M"] = {k: float(v) for k, v in t3.items()}
            if c3M < c2M:
                nonuniform, source = c3M * Rn, "c3M"
        if inputs.M <= 2:
            notes.append("M <= 2: the non-uniform f'' estimates assume M > 2")
        if inputs.regime == REGIME_BOUNDARY and inputs.M <= 1:
            warnings.append("log M <= 0 makes the gamma=2-alpha non-uniform term non-positive")
    for name, value in (("c1", c1), ("c2M", c2M), ("c3M", c3M)):
        if value is not None and value <= 0:
            warnings.append(f"{name} is non-positive ({value:.6g})")

    mean, abs_mean, frac = inputs.moments
    return BoundReport(
        eta1=etas.eta1, eta2=etas.eta2, eta3=etas.eta3, eta4=etas.eta4,
        q1=q1, q2=q2, Rn=Rn, c1=c1, c2M=c2M, c3M=c3M,
        uniform_bound=c1 * Rn, nonuniform_bound=nonuniform, regime=inputs.regime,
        nonuniform_source=source, sigma=inputs.sigma, d_alpha=inputs.d_alpha,
        moments={"mean": mean, "abs_mean": abs_mean, "frac_centered": frac},
        terms=terms, warnings=warnings, notes=notes,
    )
