"""Exception types shared across the package."""


class QttlabError(Exception):
    """Base class for all domain errors raised by qttlab."""


class ConfigError(QttlabError, ValueError):
    """Invalid scenario configuration (syntax or semantics)."""


class ClockSpanError(QttlabError, ValueError):
    """Clock offset queried outside the synthesized span."""


class InsufficientDataError(QttlabError, ValueError):
    """Series too short for the requested stability estimate."""


class NoCorrelationError(QttlabError, RuntimeError):
    """No statistically significant correlation peak between two tag streams."""


class NoPeakError(QttlabError, RuntimeError):
    """Histogram contains no fittable peak above background."""


class InvalidRunError(QttlabError, ValueError):
    """Measurement run cannot be combined (a peak fit failed)."""


class CampaignError(QttlabError, RuntimeError):
    """Campaign aborted (too many failed runs)."""


class TagFileError(QttlabError, ValueError):
    """Malformed or truncated binary tag file."""
