"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class TnvqcError(Exception):
    """Base class for all errors raised by :mod:`tnvqc`."""


class DimensionError(TnvqcError, ValueError):
    """Array extents do not agree."""


class AxisError(TnvqcError, IndexError):
    """An axis or qubit index is out of range."""


class InputError(TnvqcError, ValueError):
    """A caller-supplied value is outside its documented domain."""


class ConfigError(TnvqcError, ValueError):
    """A model or run configuration is inconsistent."""


class UsageError(TnvqcError, RuntimeError):
    """An API was called out of order or with mismatched state."""


class StateError(TnvqcError, ValueError):
    """A quantum state violates normalization."""


class NumericError(TnvqcError, ArithmeticError):
    """Non-finite values, overflow or underflow in a numerical sweep."""


class FormatError(TnvqcError, ValueError):
    """A binary file (IDX or checkpoint) is malformed.

    Attributes:
        offset: byte offset at which the problem was detected, if known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
