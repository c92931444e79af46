"""Shared error types for the snapshot generators."""


class SolverInstabilityError(RuntimeError):
    """A simulation produced non-finite values."""


class CflViolationError(ValueError):
    """Requested time step violates the stability limit."""
