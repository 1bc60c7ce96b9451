"""Exception types shared across the package."""


class RecogkitError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RecogkitError):
    """Invalid configuration value or combination."""


class DimensionMismatchError(RecogkitError):
    """Vectors of inconsistent dimensionality were mixed."""


class DegenerateVectorError(RecogkitError):
    """A vector with zero norm or non-finite entries was supplied."""


class MissingCenterError(RecogkitError):
    """A subject has no class center available."""


class NoImpostorError(RecogkitError):
    """Nearest-impostor search needs at least two subjects."""


class CalibrationDegenerateError(RecogkitError):
    """Calibration pool has no spread to fit against."""


class DegenerateTargetError(RecogkitError):
    """Regression targets are constant; rank statistics are undefined."""


class DivergenceError(RecogkitError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss in epoch {epoch}")


class MissingScoreError(RecogkitError):
    """A sample lacks the score kind requested by a policy."""


class EmptyTemplateError(RecogkitError):
    """Aggregation was asked to pool an empty sample set."""


class PairingError(RecogkitError):
    """A subject is missing from one side of a verification pairing."""


class UndefinedCorrelationError(RecogkitError):
    """Correlation of a constant sequence is undefined."""


class FormatError(RecogkitError):
    """Malformed on-disk artifact."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File was written with an unsupported format version."""


class TruncatedPayloadError(FormatError):
    """File ends before the payload announced by its header."""


class DuplicateSampleError(FormatError):
    """Two records share a sample id."""
