"""Exception hierarchy shared by every qvmc module."""


class QvmcError(Exception):
    """Base class for all library errors."""


class InvalidSizeError(QvmcError, ValueError):
    pass


class DimensionError(QvmcError, ValueError):
    pass


class ResourceError(QvmcError, MemoryError):
    """Requested dense object exceeds the configured qubit cap."""


class InvalidOperatorError(QvmcError, ValueError):
    pass


class RequiresRealParametersError(QvmcError, ValueError):
    pass


class DomainError(QvmcError, ValueError):
    pass


class DegenerateSeriesError(QvmcError, ValueError):
    pass


class DegenerateFitError(QvmcError, ValueError):
    pass


class LinearSolveError(QvmcError, ArithmeticError):
    pass


class InvalidStateError(QvmcError, ValueError):
    pass


class InvalidMatrixError(QvmcError, ValueError):
    pass


class UndefinedSpecialTimeError(QvmcError, ValueError):
    pass


class TrainingDivergedError(QvmcError, ArithmeticError):
    """Raised when the sampled energy becomes non-finite.

    The partial trace is attached so callers can inspect the run up to the
    failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class PauliParseError(QvmcError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(QvmcError, ValueError):
    def __init__(self, message, key=None):
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class ExperimentError(QvmcError, RuntimeError):
    """A library error raised inside an orchestrated experiment.

    The original exception is kept as ``__cause__``; ``kind`` names the
    experiment that failed.
    """

    def __init__(self, kind, cause):
        super().__init__(f"experiment {kind!r} failed: {type(cause).__name__}: {cause}")
        self.kind = kind
