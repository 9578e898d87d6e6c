"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input or configuration does not satisfy a documented precondition."""


class SolverRejected(RuntimeError):
    """A solver declined to produce an estimate (degenerate or ill-posed input)."""
