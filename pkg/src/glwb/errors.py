"""Exception types shared across the package."""


class GlwbError(Exception):
    """Base class for package errors."""


class InvalidInputError(GlwbError, ValueError):
    """Raised for out-of-domain parameters, malformed configs or bad queries."""


class NumericalFailureError(GlwbError, ArithmeticError):
    """Raised when a solver hits a state it cannot continue from (e.g. a zero pivot)."""
