"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: spec errors 2, precondition
violations 3, numerical failures 4.
"""


class GraphSpecError(ValueError):
    """The graph description is malformed or violates a model invariant."""


class PreconditionError(ValueError):
    """An operation was called outside its domain."""


class BudgetExceeded(PreconditionError):
    """A path enumeration would exceed the configured budget."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (singular system, no convergence)."""


class NearSingularWarning(RuntimeWarning):
    """I - W(k) is badly conditioned at the requested wave number."""


class RegimeWarning(UserWarning):
    """Parameters fall outside the regime where an approximation is valid."""
