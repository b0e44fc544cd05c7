"""Exception types shared across the toolkit."""


class RadtextError(Exception):
    """Base class for every toolkit error."""


class ParseError(RadtextError):
    """Malformed input row; message names the offending line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(RadtextError):
    """Input violates a documented invariant or precondition."""


class DegenerateSplitError(ValidationError):
    """Train or test side empty after rounding the split fraction."""


class EmptyOverlapError(ValidationError):
    """Two annotation sets share no record ids."""


class EmptyMatrixError(RadtextError):
    """Agreement asked of a matrix with zero items."""


class UndefinedKappaError(RadtextError):
    """Chance agreement is 1, leaving kappa 0/0."""


class MissingClassError(ValidationError):
    """A required label class has no examples."""


class DivergenceError(RadtextError):
    """Training loss became non-finite; message names the epoch."""


class ModeError(RadtextError):
    """Operation asked of a model trained in an incompatible mode."""


class NotFittedError(RadtextError):
    """Transform called before fit."""


class NumericError(RadtextError):
    """A numeric input or result is NaN or infinite."""
