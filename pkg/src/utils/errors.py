# src/utils/errors.py
"""
Exception hierarchy shared by every package.

The CLI maps these onto process exit codes (see src/ui/cli_interface.py).
"""


class StatewiseError(Exception):
    """Base class for all errors raised by this project."""


class ConfigError(StatewiseError):
    """Invalid, missing or unknown configuration key."""


class DatasetError(StatewiseError):
    """Dataset violates one of its invariants."""


class FeatureFileError(StatewiseError):
    """Base class for feature-file decoding problems."""


class FeatureFormatError(FeatureFileError):
    """Wrong magic bytes or unsupported version."""


class TruncatedFileError(FeatureFileError):
    """File ends before the declared number of records."""


class DimensionMismatchError(FeatureFileError):
    """Feature dimension does not match what the caller expects."""


class CheckpointError(StatewiseError):
    """Unreadable or incompatible encoder checkpoint."""


class IndexBuildError(StatewiseError):
    """k-means / IVF construction or lookup failed."""


class EncoderError(StatewiseError):
    """Bad encoder input (e.g. an empty view set)."""


class ObjectiveMismatchError(StatewiseError):
    """Pair batch consumed by the wrong joint objective."""


class NonFiniteLossError(StatewiseError):
    """Loss became NaN/inf during training."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload or {}


class EvaluationError(StatewiseError):
    """Evaluation cannot produce a score (empty gallery, no valid query)."""
