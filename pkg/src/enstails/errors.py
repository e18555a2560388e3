"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two gridded objects do not share the same grid (or units)."""


class DataError(ValueError):
    """Input data violates a contract (NaN where forbidden, empty sample, ...)."""


class UndefinedFractionError(ValueError):
    """An area fraction was requested over an empty (zero-weight) selection."""


class FitError(RuntimeError):
    """A distribution fit could not be completed.

    May carry the best parameters found so far in ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(ValueError):
    """A run configuration is invalid or references missing inputs."""


class BlockFormatError(ValueError):
    """File is not a gridded-block container (bad magic bytes)."""


class BlockHeaderError(BlockFormatError):
    """Container header is malformed or declares impossible dimensions."""


class BlockPayloadError(BlockFormatError):
    """Container payload is truncated or has trailing bytes."""
