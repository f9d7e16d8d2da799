"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a mathematical precondition (e.g. not positive definite)."""


class ValidationError(ValueError):
    """A configuration or input file failed validation."""


class NumericalError(RuntimeError):
    """A computation left its trusted regime (divergence, lost monotonicity, ...)."""


class QuadratureError(NumericalError):
    """The grid self-test failed, so downstream integrals cannot be trusted."""
