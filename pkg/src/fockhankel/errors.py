"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: :class:`ParameterError` -> 2,
:class:`ConvergenceError` -> 3.
"""

from __future__ import annotations

from typing import Any


class FockHankelError(Exception):
    """Base class for library errors."""


class ParameterError(FockHankelError, ValueError):
    """An input is outside the documented domain."""


class ConvergenceError(FockHankelError, ArithmeticError):
    """A series or quadrature failed to reach its tolerance.

    Parameters
    ----------
    message:
        Human readable diagnostic.
    partial:
        Best value available when the iteration stopped, if any.
    """

    def __init__(self, message: str, partial: Any = None) -> None:
        super().__init__(message)
        self.partial = partial
