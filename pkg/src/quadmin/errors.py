"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: dimension mismatch, bad spectrum, bad config."""


class InvalidFStarError(ValueError):
    """The supplied optimal value is provably wrong.

    Raised by Polyak-step methods when an observed function value drops
    below the claimed minimum.
    """


class InvalidQError(ValueError):
    """Metric weight polynomial is not positive at an active eigenvalue."""


class DegenerateMomentumError(ArithmeticError):
    """Momentum denominator vanished relative to its positive part.

    Carries diagnostics: the iteration ``t`` at which the step was attempted,
    the offending ``denominator`` and the positive reference ``scale`` the
    guard compared it against.
    """

    def __init__(self, message: str, t: int | None = None,
                 denominator: float | None = None, scale: float | None = None):
        super().__init__(message)
        self.t = t
        self.denominator = denominator
        self.scale = scale


class CGBreakdownError(ArithmeticError):
    """Conjugate-gradient search direction with nonpositive curvature."""


class MeasureExhaustedError(RuntimeError):
    """Orthogonal polynomial sequence ended: measure support is used up."""


class InvalidTrajectoryError(ValueError):
    """Trajectory lacks usable step parameters for polynomial rebuilding."""
