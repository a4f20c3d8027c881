#!/usr/bin/env python3
"""
Quadrature helpers: composite Gauss-Legendre rules on explicit panel edges
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import integrate

from app.errors import NonConvergence


@lru_cache(maxsize=8)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def panel_rule(edges, order: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule over the panels"""
    x, w = _legendre(order)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b) + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def dyadic_edges(lo: float, hi: float, levels: int) -> np.ndarray:
    """Edges hi*2^-levels, ..., hi/2, hi, graded toward lo=0"""
    if lo != 0.0:
        raise ValueError("dyadic grading is anchored at zero")
    return hi * np.power(2.0, -np.arange(levels, -1, -1, dtype=float))


def quad_panels(func, edges, epsabs: float, epsrel: float, first_weight=None, limit: int = 200):
    """
    Adaptive Gauss-Kronrod (QUADPACK) over consecutive panels.

    first_weight: optional (weight, wvar) applied to the first panel only,
    e.g. ("alg", (r, 0.0)) for an algebraic singularity at the origin.
    Returns (value, abserr); raises NonConvergence when a panel reports a
    QUADPACK failure and the accumulated error estimate exceeds epsabs.
    """
    total = 0.0
    abserr = 0.0
    failed = []
    for k in range(len(edges) - 1):
        a, b = float(edges[k]), float(edges[k + 1])
        if b <= a:
            continue
        kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
        if k == 0 and first_weight is not None:
            kwargs["weight"], kwargs["wvar"] = first_weight
            out = integrate.quad(lambda t: func(t, True), a, b, **kwargs)
        else:
            out = integrate.quad(lambda t: func(t, False), a, b, **kwargs)
        total += out[0]
        abserr += out[1]
        if len(out) > 3:
            failed.append((a, b, out[3]))
    if failed and abserr > max(epsabs * len(edges), epsrel * abs(total)):
        a, b, msg = failed[0]
        raise NonConvergence(f"quadrature failed on [{a:.4g}, {b:.4g}]: {msg}")
    return total, abserr
