"""Exception hierarchy."""


class FeasoptError(Exception):
    """Base class for all errors raised by feasopt."""


class InfeasibleBounds(FeasoptError):
    """Some lower bound exceeds its upper bound."""


class DegenerateBox(FeasoptError):
    """A finite box is narrower than the rank tolerance allows."""


class InfeasibleStart(FeasoptError):
    """The initial point could not be made feasible."""


class NonFiniteDerivative(FeasoptError):
    """A derivative evaluation produced NaN or inf."""


class LinAlgFailure(FeasoptError):
    """A dense factorization failed to converge."""


class IndefiniteProjection(FeasoptError):
    """Projected CG hit r.g <= 0; the projected operator is unusable."""


class RetractionDiverged(FeasoptError):
    """A retraction did not reach the feasibility tolerance."""


class CoordinateRetractFailed(RetractionDiverged):
    """The coordinate-wise bound retraction has no valid image."""


class LineSearchFailed(FeasoptError):
    """No acceptable step length was found."""
