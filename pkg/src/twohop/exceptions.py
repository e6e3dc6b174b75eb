"""Exception types shared across the package."""


class TwoHopError(Exception):
    """Base class for all package errors."""


class NonFiniteError(TwoHopError):
    """An input matrix contains NaN or Inf entries."""


class ShapeMismatchError(TwoHopError):
    """Operand dimensions are inconsistent."""


class EigenvalueCollisionError(TwoHopError):
    """Spectra of the two Sylvester operands are too close for a stable solve."""


class SolverFailureError(TwoHopError):
    """A dense solve produced a residual above the guaranteed bound."""


class BadSpecError(TwoHopError):
    """An ensemble specification is invalid."""


class ConditionViolationError(TwoHopError):
    """Channel gains violate the genericity conditions a construction needs."""


class SingularConstructionError(TwoHopError):
    """A constructed kernel failed its post-solve null/rank verification."""


class DecompositionImpossibleError(TwoHopError):
    """Both interference blocks vanish while the direct block does not."""


class InsufficientDataError(TwoHopError):
    """Not enough grid points inside the fit window."""


class InfeasibleStartError(TwoHopError):
    """Initial kernels violate the relay power set."""


class BadConfigError(TwoHopError):
    """A sweep configuration is invalid."""


class IoFailureError(TwoHopError):
    """Result emission failed."""
