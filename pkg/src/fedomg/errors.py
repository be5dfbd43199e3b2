"""Exception types shared across the package."""


class FedomgError(Exception):
    """Base class for package-specific errors."""


class DimensionError(FedomgError, ValueError):
    """Operands have incompatible shapes, or an input is empty."""


class InvalidInputError(FedomgError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(FedomgError, ArithmeticError):
    """A non-finite value appeared during an iterative solve."""


class IdxFormatError(FedomgError, ValueError):
    """Malformed IDX file; the message names the offending field."""
