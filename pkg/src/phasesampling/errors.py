"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for input validation,
3 for numerical diagnostics.
"""

from __future__ import annotations


class PSPError(Exception):
    exit_code = 1


class ValidationError(PSPError, ValueError):
    exit_code = 2


class NumericalError(PSPError, ArithmeticError):
    exit_code = 3


# geometry
class TooFewPoints(ValidationError):
    pass


class RankDeficient(ValidationError):
    pass


class DivisionByZeroDepth(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


# signal
class InvalidConfig(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ColumnOutOfRange(ValidationError, IndexError):
    pass


# recovery
class EmptySignal(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NearZeroMagnitude(NumericalError):
    pass


# simkit
class InvalidSpec(ValidationError):
    pass
