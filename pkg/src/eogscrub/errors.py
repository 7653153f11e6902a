"""Exception hierarchy shared by every eogscrub module."""

import warnings


class EogScrubError(Exception):
    """Base class for all library errors."""


class LengthMismatch(EogScrubError, ValueError):
    pass


class EmptyInput(EogScrubError, ValueError):
    pass


class TooFewSamples(EogScrubError, ValueError):
    pass


class BadBand(EogScrubError, ValueError):
    pass


class BadCutoff(EogScrubError, ValueError):
    pass


class SignalTooShort(EogScrubError, ValueError):
    pass


class TooShort(EogScrubError, ValueError):
    pass


class DegenerateParams(EogScrubError, ValueError):
    pass


class OutOfRange(EogScrubError, ValueError):
    pass


class ShapeMismatch(EogScrubError, ValueError):
    pass


class OddDims(ShapeMismatch):
    pass


class SpatialMismatch(ShapeMismatch):
    pass


class BadRate(EogScrubError, ValueError):
    pass


class StaleCache(EogScrubError, RuntimeError):
    pass


class FormatError(EogScrubError, ValueError):
    pass


class VersionMismatch(FormatError):
    pass


class EmptySet(EogScrubError, ValueError):
    pass


class SchemeMismatch(EogScrubError, ValueError):
    pass


class ConfigError(EogScrubError, ValueError):
    pass


class DegenerateRange(UserWarning):
    """Soft error: min-max normalization of a constant signal."""


def warn_degenerate(msg):
    warnings.warn(msg, DegenerateRange, stacklevel=3)
