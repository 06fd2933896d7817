"""Exception hierarchy shared by every pomchain module."""


class PomError(Exception):
    """Base class for all library errors."""


class ParameterError(PomError, ValueError):
    """A numeric or configuration argument is outside its domain."""


class RangeError(PomError, IndexError):
    """A block or window index does not exist in the chain."""


class IncompleteWindowError(PomError):
    """Window statistics were requested for a window shorter than the period."""


class UndefinedStakeError(PomError):
    """Mining stake is undefined because the window has no miners."""


class InvalidKeyError(PomError, ValueError):
    """Secret key bytes are malformed for the signature scheme."""


class EncodingError(PomError, ValueError):
    """A value violating its type invariants was passed to the encoder."""


class DecodeError(PomError, ValueError):
    """Serialized bytes are malformed, non-canonical or fail the integrity check."""


class JobError(PomError):
    """A mining job would append a structurally illegal block."""
