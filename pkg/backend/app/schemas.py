#!/usr/bin/env python3
"""
Request / response models of the HTTP service
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, validator


def _check_alpha(value: float) -> float:
    if not 1.0 < value < 2.0:
        raise ValueError("alpha must lie in (1,2)")
    return value


def _check_delta(value: float) -> float:
    if not -1.0 <= value <= 1.0:
        raise ValueError("delta must lie in [-1,1]")
    return value


class BoundRequest(BaseModel):
    """Law (preset + parameters), sample size and optional strike"""
    preset: str = "pareto"
    alpha: float
    delta: float = 0.0
    n: int
    M: Optional[float] = None
    gamma: Optional[float] = None
    c: Optional[float] = None
    A: Optional[float] = None
    L: Optional[float] = None

    _alpha = validator("alpha", allow_reuse=True)(_check_alpha)
    _delta = validator("delta", allow_reuse=True)(_check_delta)

    @validator("n")
    def n_positive(cls, value):
        if value < 1:
            raise ValueError("n must be >= 1")
        return value

    @validator("M")
    def strike_positive(cls, value):
        if value is not None and not value > 0:
            raise ValueError("M must be positive")
        return value


class BoundReportModel(BaseModel):
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
    nonuniform_source: Optional[str]
    sigma: float
    d_alpha: float
    moments: Dict[str, float]
    terms: Dict[str, Dict[str, float]]
    warnings: List[str]
    notes: List[str]


class SteinVerifyRequest(BaseModel):
    """verify-stein parameters for g_M"""
    alpha: float
    delta: float = 0.0
    M: float = 2.0
    y: List[float] = [-3.0, 0.0, 3.0]

    _alpha = validator("alpha", allow_reuse=True)(_check_alpha)
    _delta = validator("delta", allow_reuse=True)(_check_delta)

    @validator("M")
    def strike_positive(cls, value):
        if not value > 0:
            raise ValueError("M must be positive")
        return value

    @validator("y")
    def points_present(cls, value):
        if not value or len(value) > 32:
            raise ValueError("y must hold between 1 and 32 points")
        return value


class DensityResponse(BaseModel):
    alpha: float
    delta: float
    sigma: float
    y: float
    density: float


class CallResponse(BaseModel):
    alpha: float
    delta: float
    sigma: float
    M: float
    call: float
