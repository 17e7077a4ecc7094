"""Exception hierarchy shared across the package."""


class SlitflowError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SlitflowError):
    """Input point lies outside the required domain (e.g. not in the upper half-plane)."""


class CoincidentPointsError(SlitflowError):
    """Two points that must be distinct are numerically coincident."""


class ParameterRangeError(SlitflowError):
    """A model parameter is outside its admissible range."""


class OutsideTriangleError(SlitflowError):
    """Point lies outside the closed triangle beyond tolerance."""


class ShapeViolationError(SlitflowError):
    """A pushed-forward vector field does not have the normalized Laurent shape."""


class FiniteDifferenceError(SlitflowError):
    """Finite-difference estimates disagree across step sizes beyond tolerance."""


class PoleError(SlitflowError):
    """Field evaluated at its pole."""


class BranchObstructionError(SlitflowError):
    """No continuous branch of the harmonic observable exists on the upper half-plane."""


class InconsistentSystemError(SlitflowError):
    """The coefficient linear system admits no solution; carries the residual vector."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class NeutralityError(SlitflowError):
    """Charge vector violates the zero-total-charge requirement."""


class BranchPointError(SlitflowError):
    """Evaluation requested at or too close to a branch point."""


class StepExplosionError(SlitflowError):
    """Trajectory left the guard radius during integration."""


class ReversalInstabilityError(SlitflowError):
    """Backward Loewner integration left the upper half-plane."""


class SupportViolationError(SlitflowError):
    """Test function support is not contained in the required domain."""


class InversionError(SlitflowError):
    """Newton inversion of a conformal map failed to converge."""


class ConfigError(SlitflowError):
    """Invalid run configuration."""
