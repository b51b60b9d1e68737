"""Exception hierarchy shared by the library and the CLI."""


class FreedynError(Exception):
    """Base class for all toolkit errors."""


class MalformedInputError(FreedynError, ValueError):
    """A word, letter or document could not be parsed."""


class DomainError(FreedynError, ValueError):
    """An operation was called outside its mathematical domain."""


class CertificationError(FreedynError):
    """Forward and backward images of an automorphism do not invert each other."""

    def __init__(self, message, letter=None):
        super().__init__(message)
        self.letter = letter


class UnsupportedOperationError(FreedynError):
    """The operation cannot be computed exactly from truncated data."""


class ConvergenceError(FreedynError):
    """An iteration exhausted its budget; ``partial`` holds the last state."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ResourceError(FreedynError):
    """A word outgrew the configured letter cap."""


class ConfigError(FreedynError):
    """Invalid experiment configuration; ``field`` names the offending location."""

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
