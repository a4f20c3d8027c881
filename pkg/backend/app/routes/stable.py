from fastapi import APIRouter, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.errors import StableSteinError
from app.routes import http_error
from app.schemas import CallResponse, DensityResponse
from app.services.stable_dist import StableParams, call_expectation_stable, cdf, char_fn, density, quantile

router = APIRouter(tags=["stable"])
limiter = Limiter(key_func=get_remote_address)


@router.get("/stable/density", response_model=DensityResponse)
@limiter.limit("60/minute")
def get_density(request: Request, alpha: float, y: float, delta: float = 0.0, sigma: float = 1.0):
    """Density of S_alpha(sigma, delta) at y"""
    try:
        params = StableParams(alpha, sigma, delta)
        value = density(params, y)
    except StableSteinError as exc:
        raise http_error(exc)
    return DensityResponse(alpha=alpha, delta=delta, sigma=sigma, y=y, density=value)


@router.get("/stable/cdf")
@limiter.limit("60/minute")
def get_cdf(request: Request, alpha: float, y: float, delta: float = 0.0, sigma: float = 1.0):
    """Distribution function of S_alpha(sigma, delta) at y"""
    try:
        value = cdf(StableParams(alpha, sigma, delta), y)
    except StableSteinError as exc:
        raise http_error(exc)
    return {"alpha": alpha, "delta": delta, "sigma": sigma, "y": y, "cdf": value}


@router.get("/stable/quantile")
@limiter.limit("60/minute")
def get_quantile(request: Request, alpha: float, q: float, delta: float = 0.0, sigma: float = 1.0):
    try:
        value = quantile(StableParams(alpha, sigma, delta), q)
    except StableSteinError as exc:
        raise http_error(exc)
    return {"alpha": alpha, "delta": delta, "sigma": sigma, "q": q, "quantile": value}


@router.get("/stable/char_fn")
def get_char_fn(alpha: float, lam: float, delta: float = 0.0, sigma: float = 1.0):
    """Characteristic function at lambda, as real and imaginary parts"""
    try:
        value = char_fn(StableParams(alpha, sigma, delta), lam)
    except StableSteinError as exc:
        raise http_error(exc)
    return {"alpha": alpha, "delta": delta, "sigma": sigma, "lambda": lam, "re": value.real, "im": value.imag}


@router.get("/stable/call", response_model=CallResponse)
@limiter.limit("60/minute")
def get_call(request: Request, alpha: float, M: float, delta: float = 0.0, sigma: float = 1.0):
    """E(Y - M)_+ for Y ~ S_alpha(sigma, delta)"""
    try:
        value = call_expectation_stable(StableParams(alpha, sigma, delta), M)
    except StableSteinError as exc:
        raise http_error(exc)
    return CallResponse(alpha=alpha, delta=delta, sigma=sigma, M=M, call=value)
