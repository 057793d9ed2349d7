"""Exception types shared across the package."""


class StstError(Exception):
    """Base class for all package errors."""


class ParameterError(StstError, ValueError):
    """An argument is outside its mathematical or structural domain."""


class DegenerateRuleError(ParameterError):
    """A stopping rule would place the stop threshold on the prediction
    threshold (delta = 1), which never stops anything strictly."""


class CalibrationError(StstError):
    """The calibration set cannot support the requested estimate."""


class DegenerateDataError(CalibrationError):
    """Calibration scores have zero variance; no stopping rule is defined."""


class UndefinedRateError(StstError):
    """A rate has an empty denominator (no examples in the conditioning class)."""


class ParseError(StstError):
    """Malformed input text; the message carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(StstError):
    """A dataset source contained no examples."""


class ModelFormatError(StstError):
    """A serialized model container is malformed or fails verification."""


class InsufficientAcceptanceError(StstError):
    """Rejection sampling accepted no trials; widen the band or add trials."""


class TrainingError(StstError):
    """The training set cannot produce a classifier (e.g. a single class)."""
