"""Exception types raised across the package."""

from __future__ import annotations


class FracOCPError(Exception):
    """Base class for all errors raised by :mod:`fracocp`."""


class ConvergenceError(FracOCPError, ArithmeticError):
    """An iterative node computation did not reach its residual target."""


class NormalizationError(FracOCPError, ArithmeticError):
    """Expansion coefficients failed the Kronecker reconstruction check."""


class OracleMismatchError(FracOCPError, AssertionError):
    """A matrix disagrees with its independent validation route."""


class NonFiniteSampleError(FracOCPError, ValueError):
    """A problem function returned NaN or infinity at a grid point."""


class ExprError(FracOCPError, ValueError):
    """Base class for expression-language errors."""

    def __init__(self, message: str, pos: int | None = None) -> None:
        if pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)
        self.pos = pos


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


class ExprDomainError(ExprError):
    """An operation left the real domain, e.g. a negative base to a fractional power."""
