"""Exception hierarchy shared across the pipeline stages."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(PipelineError):
    """Inconsistent shapes, index sets, or configuration values."""


class DataFormatError(PipelineError):
    """Malformed input file; carries file and line context when known."""

    def __init__(self, message, path=None, line=None):
        ctx = ""
        if path is not None:
            ctx = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + ctx)
        self.path = path
        self.line = line


class NumericError(PipelineError):
    """Non-finite values or numerically invalid state."""


class ConvergenceError(PipelineError):
    """Iterative solver hit its iteration cap; carries the last iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DegenerateWeightsError(PipelineError):
    """No separating structure: every between-cluster distance term is zero."""


class AllCensoredError(StructuralError):
    """Survival fit requested but every subject is censored."""
