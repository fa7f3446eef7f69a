"""Exception types raised across the package."""


class BethexxError(Exception):
    """Base class for all package-specific errors."""


class PoleAtArgument(BethexxError):
    """Evaluation point coincides with a pole (e.g. lam - i hits a root)."""


class PoleArgument(PoleAtArgument):
    """Special-function argument sits on a pole (nonpositive integer)."""


class OddHoleCount(BethexxError):
    """Spinon excitations carry an even number of holes."""


class SizeLimitExceeded(BethexxError):
    """Brute-force engine asked for a chain beyond its size limit."""


class SectorMismatch(BethexxError):
    """Operator cannot connect the two magnetization sectors."""


class NonConvergence(BethexxError):
    """Newton iteration failed; carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class QuantumNumberCollision(BethexxError):
    """Duplicate or out-of-range quantum numbers in an excitation spec."""


class DeviationUnderflow(BethexxError):
    """String deviation below double-precision resolution."""


class CoincidingParameters(BethexxError):
    """Coinciding rapidities make a scalar-product prefactor singular."""


class CoincidingHoles(BethexxError):
    """Equal hole rapidities degenerate the scattering-factor product."""


class SingularGaudin(BethexxError):
    """Gaudin matrix is singular after regularization."""


class UnpairedComplexRoot(BethexxError):
    """A complex root has no conjugate partner within tolerance."""


class AmbiguousBoundary(BethexxError):
    """|Im lam| too close to 1/2 to classify as close or wide pair."""


class BranchBoundary(BethexxError):
    """Density evaluated too close to a branch line |Im mu| = a."""


class QuadratureFailure(BethexxError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class ConfigError(BethexxError):
    """Malformed CLI configuration or excitation spec."""
