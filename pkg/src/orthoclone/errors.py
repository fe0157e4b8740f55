"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class OrthocloneError(Exception):
    code = "ERROR"


class InvalidArgument(OrthocloneError, ValueError):
    code = "INVALID_ARGUMENT"


class DimensionMismatch(OrthocloneError, ValueError):
    code = "DIMENSION_MISMATCH"


class NotHermitian(OrthocloneError, ValueError):
    code = "NOT_HERMITIAN"


class InvalidState(OrthocloneError, ValueError):
    code = "INVALID_STATE"


class NotOrthogonalInput(OrthocloneError, ValueError):
    """Composite states overlap, so the ordinary no-cloning theorem already applies."""

    code = "NOT_ORTHOGONAL_INPUT"

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NotOrthogonal(OrthocloneError, ValueError):
    code = "NOT_ORTHOGONAL"


class NotProduct(OrthocloneError, ValueError):
    code = "NOT_PRODUCT"


class Unsupported(OrthocloneError, ValueError):
    code = "UNSUPPORTED"


class PreconditionFailed(OrthocloneError, ValueError):
    code = "PRECONDITION_FAILED"


class NonCommutingFamily(OrthocloneError, ValueError):
    code = "NON_COMMUTING_FAMILY"


class ScheduleViolation(OrthocloneError, RuntimeError):
    code = "SCHEDULE_VIOLATION"


class EngineError(OrthocloneError, RuntimeError):
    """An intermediate global state failed the trace or positivity check."""

    code = "ENGINE_ERROR"


class StateFileError(OrthocloneError, ValueError):
    code = "STATE_FILE_ERROR"

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
