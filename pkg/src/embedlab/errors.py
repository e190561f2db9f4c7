"""Exception types shared across embedlab."""


class ValidationError(ValueError):
    """Bad input or configuration (CLI exit code 2)."""


class InequalityViolation(AssertionError):
    """A guaranteed inequality failed on concrete data (CLI exit code 3)."""


class QuadratureError(RuntimeError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
