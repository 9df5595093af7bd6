"""Exception hierarchy. The CLI maps each family to an exit code."""


class EvoSampleError(Exception):
    """Base class for all package errors."""


class ConfigError(EvoSampleError, ValueError):
    """Invalid configuration or usage (exit code 1)."""


class DataError(EvoSampleError):
    """Problem with input data (exit code 2)."""


class MissingFileError(DataError, FileNotFoundError):
    pass


class MissingColumnError(DataError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class UnparseableCellError(DataError, ValueError):
    pass


class EmptyFileError(DataError):
    pass


class MissingValueError(DataError, ValueError):
    pass


class DegenerateSplitError(DataError, ValueError):
    pass


class InvariantError(EvoSampleError, AssertionError):
    """An internal invariant was violated (exit code 3)."""
