"""
This module contains the exceptions used for building, transforming and verifying bilinear schemes.
"""

from __future__ import annotations

from typing import Optional

__all__ = [
    'FMMDimensionError',
    'FMMException',
    'FMMFixtureNotFoundError',
    'FMMParameterError',
    'FMMParseError',
    'FMMPeelViolation',
    'FMMStructureError',
    'FMMUnverifiedSchemeError',
    'FMMValidationError'
]


class FMMException(Exception):
    """Class of exceptions raised deliberately by this package. A failed verification is never raised: it is reported
    through :class:`.BrentReport` or :class:`.EvalReport` instead.
    """


class FMMStructureError(FMMException):
    """Class of exceptions raised when a coefficient matrix of a term does not have the shape the scheme dims
    require.
    """

    #: Index of the offending term in the scheme's term sequence.
    term_index: int

    def __init__(self, term_index: int, message: str) -> None:
        super().__init__(f'Term {term_index}: {message}')
        self.term_index = term_index


class FMMValidationError(FMMException):
    """Class of exceptions raised when data is well-shaped but violates a scheme or file invariant, such as a dead term
    or a zero coefficient.
    """


class FMMParseError(FMMValidationError):
    """Class of exceptions raised when a scheme or bounds document cannot be parsed."""

    #: 1-based line of the error, when known.
    line: Optional[int]

    #: 1-based column of the error, when known.
    column: Optional[int]

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        if line is not None:
            message = f'{message} (line {line}, column {column})'
        super().__init__(message)
        self.line = line
        self.column = column


class FMMDimensionError(FMMException):
    """Class of exceptions raised when the dims of operands or schemes are incompatible."""


class FMMFixtureNotFoundError(FMMException):
    """Class of exceptions raised when an optional fixture scheme file is not present."""


class FMMParameterError(FMMException):
    """Class of exceptions raised for illegal parameters, such as ``u <= v`` for a block plan."""


class FMMPeelViolation(FMMException):
    """Class of exceptions raised when peeling would discard a live coefficient. Seeing one during composition signals
    an unsound block plan.
    """


class FMMUnverifiedSchemeError(FMMException):
    """Class of exceptions raised when strict composition is given an input scheme that fails the Brent equations."""
