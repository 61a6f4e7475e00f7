"""Exception types shared across the package."""


class DickeSimError(Exception):
    """Base class for all package errors."""


class DegenerateDetuning(DickeSimError):
    """A Raman denominator is smaller than the configured safety floor."""


class OutsideValidity(DickeSimError):
    """Parameters lie outside the validity domain of a closed-form result."""


class SignMismatch(DickeSimError):
    """Dispersive shift and detuning have inconsistent signs."""


class NegativePower(DickeSimError):
    """Beam power must be non-negative."""


class DimensionMismatch(DickeSimError):
    """Operator or state dimensions are inconsistent."""


class TruncationError(DickeSimError):
    """Population leaked into the top of the truncated Fock space."""


class StepSizeUnderflow(DickeSimError):
    """Adaptive integrator step size fell below the hard floor."""


class SingularLiouvillian(DickeSimError):
    """Steady-state solve failed; the stationary manifold is degenerate."""


class NonStationary(DickeSimError):
    """Trajectory did not reach a stationary state within the time cap."""


class NotDetected(DickeSimError):
    """Ramp finished without the detection criterion firing."""


class FitDegenerate(DickeSimError):
    """Two-peak fit collapsed; peaks are not resolved."""


class ConfigError(DickeSimError):
    """A configuration file or override could not be parsed or validated."""


class CheckFailed(DickeSimError):
    """One or more cross-validation checks failed."""

    def __init__(self, message, failed_ids=()):
        super().__init__(message)
        self.failed_ids = tuple(failed_ids)
