"""
Exceptions used throughout the FTL package.

This module defines custom exceptions that are raised by the algebra,
geometry and certification components of the FTL package.
"""

from typing import Optional


class FTLError(Exception):
    """Base exception for all FTL-related errors."""
    pass


class ParseError(FTLError):
    """
    Raised when a domain expression cannot be parsed.

    Carries the 1-based line and column of the offending token and the
    half-open character span inside the source text.
    """

    def __init__(
        self,
        message: str,
        source: str = "",
        position: int = 0,
        end: Optional[int] = None,
    ):
        self.source = source
        self.position = position
        self.span = (position, end if end is not None else position + 1)
        prefix = source[:position]
        self.line = prefix.count("\n") + 1
        self.column = position - (prefix.rfind("\n") + 1) + 1
        super().__init__(f"{message} (line {self.line}, column {self.column})")

    def caret(self) -> str:
        """Render the offending source line with a caret marker under the span."""
        lines = self.source.split("\n")
        if not lines or self.line > len(lines):
            return ""
        width = max(1, self.span[1] - self.span[0])
        return lines[self.line - 1] + "\n" + " " * (self.column - 1) + "^" * width


class DomainError(FTLError):
    """Raised when a model domain description is invalid."""
    pass


class FrameError(FTLError):
    """Raised when a frame or bracket decomposition is singular."""
    pass


class WeightError(FTLError):
    """Raised when a weight cannot be computed for the given list bound or slots."""
    pass


class CertificationError(FTLError):
    """Raised when a certificate asserted by the configuration fails."""
    pass


class OracleError(FTLError):
    """Raised when the Bergman quadrature oracle does not apply or diverges."""
    pass


class ExpFlowError(FTLError):
    """Raised when an exponential-map flow leaves the working window."""
    pass


class CoverError(FTLError):
    """Raised when a cover or component enumeration exceeds its configured cap."""
    pass


class ProjectionError(FTLError):
    """Raised when the boundary projection does not converge."""
    pass


class ConfigError(FTLError):
    """Raised when an experiment configuration is invalid."""
    pass
