"""Exception hierarchy shared by the numeric services and the CLI."""

from __future__ import annotations

from typing import Optional


class GenFError(Exception):
    """Base class for every error raised by the engine."""


class DomainError(GenFError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class ConvergenceError(GenFError, ArithmeticError):
    """A series or iteration hit its cap before meeting its tolerance."""

    def __init__(self, message: str, terms: Optional[int] = None) -> None:
        super().__init__(message)
        self.terms = terms


class NotPositiveDefiniteError(DomainError):
    """A Cholesky pivot was not positive (matrix not SPD or rank deficient)."""


class LeverageError(DomainError):
    """A leverage reached 1, so the deleted fit is undefined."""


class DataFormatError(DomainError):
    """Input data could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(GenFError):
    """Bad command-line usage; the message names the offending flag."""
