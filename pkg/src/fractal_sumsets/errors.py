"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedConfigurationError(ValueError):
    """The input is well formed but the requested mode is not supported."""


class ConstructionError(RuntimeError):
    """A search-based constructor gave up before finding a valid result."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class CapacityError(ValueError):
    """A depth or grid size would exceed the configured memory cap."""
