"""Exception types shared across the library."""


class StatefuseError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(StatefuseError, ValueError):
    """An argument, configuration value, or input file failed validation."""


class BehindCameraError(ValidationError):
    """The point lies at or behind the camera plane and cannot be projected."""


class NumericOverflowError(StatefuseError, ArithmeticError):
    """A forward evaluation produced a non-finite intermediate value."""
