"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: DataError -> 2, NumericError -> 3.
"""


class KgeError(Exception):
    """Base class for all toolkit errors."""


class DataError(KgeError):
    """Invalid input data (files, ids, shapes)."""


class ParseError(DataError):
    """Malformed triple file; message carries file name and line number."""


class NumericError(KgeError):
    """Non-finite values or impossible numeric operations."""


class DimensionMismatchError(DataError):
    """Parameter dimensions incompatible with the requested operation."""


class CheckpointError(DataError):
    """Base class for checkpoint load failures."""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic string."""


class VersionError(CheckpointError):
    """Checkpoint format version not supported."""


class ShapeMismatchError(CheckpointError):
    """Payload array shapes disagree with the metadata block."""


class TruncatedPayloadError(CheckpointError):
    """File ends before the declared payload is complete."""


class ChecksumError(CheckpointError):
    """Payload CRC-32 does not match the stored value."""


class VocabularyMismatchError(CheckpointError):
    """Checkpoint vocabulary hash differs from the dataset's."""
