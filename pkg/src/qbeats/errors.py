"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: parameters, configuration, or file contents."""


class IntegrationError(RuntimeError):
    """Numerical integration failed a quality check (e.g. trace drift)."""


class SteadyStateError(RuntimeError):
    """The steady-state linear system has no unique solution."""


class FitError(RuntimeError):
    """A least-squares fit is degenerate or failed to converge."""
