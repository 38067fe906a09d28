"""Exception types shared across the package."""


class RFTagError(Exception):
    """Base class for all package errors."""


class ValidationError(RFTagError, ValueError):
    """Invalid configuration or input (CLI exit status 1)."""


class DomainError(ValidationError):
    """Non-finite or otherwise out-of-domain numeric input."""


class PeakDetectionError(RFTagError):
    """A spectrum did not contain enough separable peaks."""


class FitError(RFTagError):
    """A model could not be fitted to the data it was given."""
