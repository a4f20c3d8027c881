#!/usr/bin/env python3
"""
Errors: exception hierarchy shared by the services, the CLI and the API
"""

from typing import Optional


class StableSteinError(Exception):
    """Base class for every error raised by the library"""


class ValidationFailure(StableSteinError):
    """Bad input: CLI exit code 1, HTTP 400"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class InvalidParameter(ValidationFailure):
    pass


class InvalidLaw(ValidationFailure):
    pass


class MissingBData(ValidationFailure):
    pass


class UnsupportedGamma(ValidationFailure):
    pass


class UnsupportedSkew(ValidationFailure):
    pass


class EmptyBatch(ValidationFailure):
    pass


class DegenerateFit(ValidationFailure):
    pass


class BudgetExceeded(ValidationFailure):
    pass


class NumericalFailure(StableSteinError):
    """Quadrature or fitting failed: CLI exit code 2, HTTP 500"""


class NonConvergence(NumericalFailure):
    pass


class TailFitFailure(NumericalFailure):
    pass


class DivergentInput(NumericalFailure):
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field
