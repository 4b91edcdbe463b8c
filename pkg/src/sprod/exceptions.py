"""Error types shared across the toolkit."""


class SprodError(Exception):
    """Base class for all toolkit errors."""


class ZeroVector(SprodError):
    """A row with (near-)zero norm cannot be normalized."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has norm below 1e-12 and cannot be normalized")


class FormatError(SprodError):
    """Malformed embedding file (bad magic, truncated, label out of range)."""


class IoError(SprodError):
    """Filesystem-level failure while reading or writing."""


class DimMismatch(SprodError):
    """Query dimensionality does not match the fitted model."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected D={expected}, got D={got}")


class EmptyClass(SprodError):
    """A class required for fitting has no samples."""

    def __init__(self, class_id: int):
        self.class_id = class_id
        super().__init__(f"class {class_id} has no samples")


class BadK(SprodError):
    """Invalid neighbor / cluster count."""


class Degenerate(SprodError):
    """Covariance numerically non-invertible even after ridging."""


class EmptyInput(SprodError):
    """Metric computation requires nonempty score sets."""


class SpecError(SprodError):
    """Invalid synthetic benchmark specification."""


class TooFewSamples(SprodError):
    """A group is too small for the requested subsample size."""


class ConfigError(SprodError):
    """Invalid experiment configuration."""
