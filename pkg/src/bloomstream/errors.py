"""Exception types shared across the package."""


class BloomStreamError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BloomStreamError):
    """Structurally valid input that cannot be used: mismatched sketch
    geometry, constraints with no solution, or knob combinations that
    leave the model unable to operate."""
