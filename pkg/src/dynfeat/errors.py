"""Exception and warning types.

Each error carries the process exit code the CLI maps it to:
1 for IO/parse problems, 2 for numeric failures, 3 for violated preconditions.
"""

from __future__ import annotations


class DynfeatError(Exception):
    exit_code = 1


class MalformedFile(DynfeatError):
    exit_code = 1


class NonMonotonicTime(DynfeatError):
    exit_code = 1


class TooShort(DynfeatError):
    exit_code = 3


class InvalidWindow(DynfeatError):
    exit_code = 3


class WindowTooLarge(DynfeatError):
    exit_code = 3


class GridMismatch(DynfeatError):
    exit_code = 3


class InsufficientDemos(DynfeatError):
    exit_code = 3


class InvalidSpec(DynfeatError):
    exit_code = 3


class UndefinedForZeroStiffness(DynfeatError):
    exit_code = 3


class NumericalBlowup(DynfeatError):
    exit_code = 2


class NoFiniteCell(DynfeatError):
    exit_code = 2


class DegenerateScaleWarning(UserWarning):
    """Start and goal coincide on an axis, so its forcing weights are zeroed."""

