"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration / arguments."""


class ValidationFailure(RuntimeError):
    """An oracle validation suite did not pass."""


class NumericalError(ArithmeticError):
    """A numerical routine could not reach its accuracy target."""
