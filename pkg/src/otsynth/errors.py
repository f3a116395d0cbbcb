"""Exception types shared across the engine."""


class OtsynthError(Exception):
    """Base class for all engine errors."""


class DimensionError(OtsynthError, ValueError):
    """Shapes or dimensions of the operands do not agree."""


class EmptyDistributionError(OtsynthError, ValueError):
    """An operation received a distribution with no samples."""


class InsufficientDataError(OtsynthError, ValueError):
    """Not enough samples to carry out the fit."""


class NumericError(OtsynthError, ArithmeticError):
    """A computation produced non-finite values."""


class SizeError(OtsynthError, ValueError):
    """Image dimensions violate a codec divisibility or size requirement."""


class ArchiveFormatError(OtsynthError, ValueError):
    """Weight archive bytes are not in the expected format."""


class TruncatedArchiveError(ArchiveFormatError):
    """Weight archive ended before all declared data was read."""


class IncompleteArchiveError(OtsynthError, ValueError):
    """Weight archive is missing tensors required by its layer manifest."""


class UnmatchableIdError(OtsynthError, ValueError):
    """A guidance mask references a texture ID with no counterpart."""
