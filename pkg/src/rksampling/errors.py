"""Exception and warning types."""


class EvaluationError(ValueError):
    """A generator or envelope produced a non-finite value."""


class NonAmalgamError(ValueError):
    """Partial amalgam sums did not settle inside the search window."""


class ZeroGapError(ValueError):
    """Two nodes coincide, so the node set is not relatively separated."""


class AdmissibilityError(ValueError):
    """An input violates a standing assumption (measure, decay exponent, ...)."""


class DegenerateWindowError(ValueError):
    """The level window [j0, J] is empty."""


class InfeasibleConcentrationError(RuntimeError):
    """Rejection sampling found no function with the requested concentration."""


class NetTooLargeError(ValueError):
    """Explicit net construction was requested for a space of dimension > 3."""


class EmptyRegionWarning(UserWarning):
    """A norm was requested over a region that contains no grid points."""
