"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed (overflow, event overshoot, ...)."""
