"""Exception types raised across the package."""


class InvalidDimensionError(ValueError):
    """Matrix or configuration sizes are zero or do not match."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DomainError(ValueError):
    """Inputs fall outside the domain of a map or closed form."""


class ResourceLimitError(RuntimeError):
    """A size cap for exhaustive enumeration would be exceeded."""


class DegenerateWeightError(ZeroDivisionError):
    """A coupling weight tanh(beta*g) vanishes where it must be divided by."""


class NumericalFailure(ArithmeticError):
    """A linear solve or iterative method did not produce a trustworthy answer."""
