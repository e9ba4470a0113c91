"""Exception types shared across the package."""


class RieszDomainError(ValueError):
    """An argument lies outside the region where a formula is valid."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


class NonFiniteError(ArithmeticError):
    """A user-supplied function returned inf or nan where a finite value was required."""
