"""Exception types shared across the package."""


class PxlapError(Exception):
    pass


class InvalidExponentError(PxlapError, ValueError):
    """The exponent violates ``1 < p_minus <= p_plus < inf``."""


class DomainError(PxlapError, ValueError):
    """Query outside the region where a field is defined."""


class SingularFluxError(PxlapError, ArithmeticError):
    """Flux evaluated at zero gradient with ``mu == 0`` and ``p < 2``."""


class NumericError(PxlapError, ArithmeticError):
    pass


class ConvergenceError(PxlapError, RuntimeError):
    """Inner minimisation did not reach its tolerance.

    Carries the last iterate and its residual; a trajectory solve attaches
    the partial trajectory as ``trajectory``.
    """

    def __init__(self, message, iterate=None, residual=None, trajectory=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.trajectory = trajectory


class HypothesisError(PxlapError, ValueError):
    """Rate estimate requested outside ``p_minus > 2n/(n+r0)``."""


class UnsupportedRegimeError(PxlapError, ValueError):
    """Closed-form exponents are only known for ``p_minus >= n``."""


class InsufficientTrajectoryError(PxlapError, ValueError):
    """A dense trajectory was required."""
