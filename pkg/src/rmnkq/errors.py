"""Exception types raised across the package."""


class RmnkError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RmnkError, ValueError):
    """A configuration value violates its documented bound."""


class InputError(RmnkError, ValueError):
    """An argument has the wrong shape, length or content."""


class ResourceError(RmnkError, MemoryError):
    """The request exceeds the exhaustive/simulator size guard."""


class FormatError(RmnkError, ValueError):
    """A serialized file could not be parsed.

    ``offset`` is the byte offset of the problem when it is known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class VersionError(FormatError):
    """A serialized file carries an unsupported format version."""


class UndefinedCorrelationError(RmnkError, ArithmeticError):
    """Pearson correlation is undefined because an objective is constant."""
