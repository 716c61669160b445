"""Exception types raised across the toolkit."""


class AuditError(Exception):
    """Base class for every error raised by exposure_audit."""


class ParseError(AuditError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class EmptyDatasetError(AuditError):
    pass


class SupplierConflictError(AuditError):
    pass


class TrainingDivergedError(AuditError):
    pass


class StageError(AuditError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
