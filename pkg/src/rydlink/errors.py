"""Exception and warning types shared across the package."""


class RydlinkError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RydlinkError):
    """Invalid user input: unknown level, bad field value, malformed config."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ModelError(RydlinkError):
    """The requested physics cannot be represented by the model."""


class NumericalError(RydlinkError):
    """A numerical routine failed (singular system, undamped resonance...)."""

    def __init__(self, message: str, condition: float | None = None):
        self.condition = condition
        super().__init__(message)


class PhysicsViolationError(RydlinkError):
    """A computed quantity has an unphysical sign or magnitude."""


class ConvergenceWarning(RuntimeWarning):
    """Adaptive refinement stopped before reaching its tolerance."""
