"""Exception hierarchy shared by all modules."""


class JointMeasError(Exception):
    """Base class for errors raised by jointmeas."""


class ValidationError(JointMeasError, ValueError):
    """Input does not satisfy a structural requirement (shape, hermiticity, ...)."""


class NotPSDError(ValidationError):
    """Operator has an eigenvalue below the positivity clamp window."""


class DomainError(JointMeasError, ValueError):
    """Parameter lies outside the domain where a construction is defined."""


class NumericalError(JointMeasError, ArithmeticError):
    """An iterative routine failed to converge."""
