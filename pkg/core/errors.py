# core/errors.py
"""Exception types raised across the toolkit.

Every error is also a ValueError so numeric callers can catch bad values the
usual way; the CLI maps ConfigurationError to exit code 2 and anything else
deriving from QdnnError to exit code 1.
"""


class QdnnError(ValueError):
    """Base class for all toolkit errors."""


class ConfigurationError(QdnnError):
    """Invalid sizes, qubit counts, builder capacity or run settings."""


class UsageError(QdnnError):
    """A call that does not match the shapes or indices of its arguments."""


class DomainError(QdnnError):
    """Input outside the mathematical domain of an operation."""


class IdxParseError(QdnnError):
    """Malformed IDX payload. `offset` is the byte position where decoding failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class DataError(QdnnError):
    """I/O or parse failure tied to a specific data file."""


class CheckpointError(QdnnError):
    """Checkpoint that cannot be read back."""
