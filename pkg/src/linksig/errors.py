"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes or metadata."""


class InsufficientHistory(ValueError):
    """History has fewer than the 3 entries needed to normalize."""


class SyncFailure(RuntimeError):
    """Frame synchronization metric never cleared the threshold."""


class DegenerateProbe(ValueError):
    """Probe has (near-)zero energy at one of its tone bins."""


class TraceFormatError(ValueError):
    """Trace file violates the format; carries the offending line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
