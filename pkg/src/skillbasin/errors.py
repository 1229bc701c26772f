"""Exception types shared across the package."""


class SkillbasinError(Exception):
    """Base class for all package errors."""


class ParseError(SkillbasinError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class ValidationError(SkillbasinError):
    """Input data violates a schema or value constraint."""


class CollinearityError(SkillbasinError):
    """Regression design matrix is rank deficient."""

    def __init__(self, message, columns=None):
        super().__init__(message)
        self.columns = list(columns) if columns is not None else []
