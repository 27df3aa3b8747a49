"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError`` to exit status 1 and ``DataError`` to 2;
anything else escaping a command is reported as an internal error (3).
"""


class LiftRiskError(Exception):
    """Base class for all library errors."""


class ValidationError(LiftRiskError, ValueError):
    """A caller supplied an invalid argument or configuration value."""


class InvalidTaskError(ValidationError):
    """Lifting-task geometry is negative, non-finite or otherwise unusable."""


class ParameterError(ValidationError):
    """A model or algorithm parameter is out of range for the data."""


class StratificationError(ParameterError):
    """A class has too few examples to appear in every partition."""


class DataError(LiftRiskError):
    """Input data is missing, malformed or empty."""


class EmptyRecordingError(DataError):
    pass


class SamplingError(DataError):
    """Timestamps are non-monotone or not uniformly spaced."""


class EmptyDatasetError(DataError):
    pass


class UndefinedLiftingIndexError(LiftRiskError, ZeroDivisionError):
    """The RWL is zero, so the task lies outside the equation's valid range."""


class ConvergenceError(LiftRiskError, RuntimeError):
    """SMO did not satisfy the KKT tolerance within its iteration budget."""
