from fastapi import APIRouter, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.errors import StableSteinError
from app.routes import http_error
from app.schemas import SteinVerifyRequest
from app.services.stein_core import regularity_audit, stein_fprime_call

router = APIRouter(tags=["stein"])
limiter = Limiter(key_func=get_remote_address)


@router.post("/stein/verify")
@limiter.limit("5/minute")
def post_verify(request: Request, body: SteinVerifyRequest):
    """Residual and f'' audits of the Stein solution for g_M"""
    try:
        return regularity_audit(body.M, body.alpha, body.delta, residual_points=tuple(body.y))
    except StableSteinError as exc:
        raise http_error(exc)


@router.get("/stein/fprime")
@limiter.limit("30/minute")
def get_fprime(request: Request, alpha: float, M: float, y: float, delta: float = 0.0):
    """f'_{g_M}(y)"""
    try:
        value = stein_fprime_call(M, alpha, delta, y)
    except StableSteinError as exc:
        raise http_error(exc)
    return {"alpha": alpha, "delta": delta, "M": M, "y": y, "fprime": value}
