"""Exception types raised across the package."""


class TomographyError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(TomographyError):
    """Operands live in Hilbert spaces of different (or invalid) dimension."""


class BaseMismatchError(TomographyError):
    """Tangent vectors anchored at different base states were combined."""


class ValidationError(TomographyError):
    """An input violates a structural precondition (norm, hermiticity, ...)."""


class DomainError(TomographyError):
    """A scalar argument lies outside the domain of the function."""


class ConfigError(TomographyError):
    """Invalid algorithm or experiment configuration."""
