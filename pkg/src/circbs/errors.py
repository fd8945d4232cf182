"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``GuardError`` -> 3,
``NumericalError`` -> 4.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class GuardError(DomainError):
    """Request exceeds a cost guard (enumeration size, permanent order, ...)."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class NumericalError(ArithmeticError):
    """A numerical routine failed; carries the seed needed to reproduce it."""

    def __init__(self, message, seed=None):
        if seed is not None:
            message = f"{message} (seed={seed})"
        super().__init__(message)
        self.seed = seed
