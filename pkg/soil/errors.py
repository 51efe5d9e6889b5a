"""
soil/errors.py

Exception hierarchy shared by every layer. The CLI maps each class to an
exit code: ValidationError → 2, NumericalError → 3, SizeGuardError → 4.
"""

from __future__ import annotations


class EntropyGardenError(Exception):
    """Base class for all entropyGarden failures."""
    pass


class ValidationError(EntropyGardenError, ValueError):
    """Raised when inputs or parameters violate a documented precondition."""
    pass


class NumericalError(EntropyGardenError, ArithmeticError):
    """Raised when a loss, gradient, or intermediate quantity becomes non-finite."""

    def __init__(self, message: str, step: int | None = None, index: int | None = None):
        super().__init__(message)
        self.step = step
        self.index = index


class SizeGuardError(EntropyGardenError):
    """Raised when an exhaustive search is asked to run beyond its size guard."""

    def __init__(self, message: str, limit: int | None = None, actual: int | None = None):
        super().__init__(message)
        self.limit = limit
        self.actual = actual


EXIT_CODES: dict[type, int] = {
    ValidationError: 2,
    NumericalError: 3,
    SizeGuardError: 4,
}


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an exception; unknown failures count as validation errors."""
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    if isinstance(exc, (FileNotFoundError, ValueError)):
        return 2
    return 1
