"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class DegenerateDataError(ValueError):
    """Input data carries no usable variation (e.g. a constant trace)."""


class FwhmUndefinedError(ValueError):
    """The histogram has no half-maximum crossing on at least one side."""


class CalibrationInfeasibleError(RuntimeError):
    """The requested broadening ratio cannot be reached.

    Carries ``max_ratio``, the largest ratio achievable with the given
    electronic noise floor.
    """

    def __init__(self, message: str, max_ratio: float):
        super().__init__(message)
        self.max_ratio = max_ratio


class NoDecorrelationError(RuntimeError):
    """No nonpositive autocorrelation lag was found within the analyzed range."""


class ZeroEntropyError(RuntimeError):
    """The entropy budget allows zero output bits; extraction must refuse."""


class InsufficientDataError(ValueError):
    """The bit stream is shorter than the test's minimum length."""


class ConfigError(ValueError):
    """A configuration file is malformed or violates the schema."""
