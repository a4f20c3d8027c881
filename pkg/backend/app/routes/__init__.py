from fastapi import HTTPException

from app.errors import NumericalFailure, StableSteinError, ValidationFailure


def http_error(exc: StableSteinError) -> HTTPException:
    """400 for bad input (field named in the detail), 500 for numerical failures"""
    if isinstance(exc, ValidationFailure):
        detail = f"{exc.field}: {exc}" if exc.field else str(exc)
        return HTTPException(status_code=400, detail=detail)
    if isinstance(exc, NumericalFailure):
        return HTTPException(status_code=500, detail=f"{type(exc).__name__}: {exc}")
    return HTTPException(status_code=500, detail=str(exc))
