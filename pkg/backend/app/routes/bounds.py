from fastapi import APIRouter, Request
from slowapi import Limiter
from slowapi.util import get_remote_address

from app.errors import StableSteinError
from app.routes import http_error
from app.schemas import BoundReportModel, BoundRequest
from app.services.attraction_domain import preset_law
from app.services.bounds import assemble_report, bound_inputs_for

router = APIRouter(tags=["bounds"])
limiter = Limiter(key_func=get_remote_address)


@router.post("/bounds", response_model=BoundReportModel)
@limiter.limit("30/minute")
def post_bounds(request: Request, body: BoundRequest):
    """
    Uniform and non-uniform bounds for a preset law

    Returns the constants, R_n, the two bounds and any warnings about the
    printed constants.
    """
    try:
        law = preset_law(body.preset, body.alpha, body.delta, body.gamma, body.c, body.A, body.L)
        report = assemble_report(bound_inputs_for(law, body.n, body.M))
    except StableSteinError as exc:
        raise http_error(exc)
    return BoundReportModel(**report.to_dict())
