"""Exception types shared across the package."""


class PayplanError(Exception):
    """Base class for all payplan errors."""


class ConfigError(PayplanError):
    """Invalid plan or training configuration. Carries the offending field path."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DataError(PayplanError):
    """Rate data is missing, malformed, or does not cover the horizon."""


class ParseError(DataError):
    """A rate file failed to parse. Carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SequencingError(PayplanError):
    """An operation was applied outside its valid position in the plan timeline."""


class TrainingError(PayplanError):
    """Training produced a non-finite value. Carries the iteration index."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        super().__init__(message)


class CheckpointError(PayplanError):
    """A policy checkpoint could not be loaded or does not match the requested shape."""
