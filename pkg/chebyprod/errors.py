class ChebyprodError(Exception):
    """Base class for every error raised by chebyprod."""


class InvalidSpecError(ChebyprodError, ValueError):
    """Raised when input data violates a structural requirement (T, mu, sigma, rho, gamma, epsilon)."""


class InfeasibleSpecError(ChebyprodError):
    """Raised when the moment data admits no non-negative distribution, or is not Slater-strict where required."""


class SolverError(ChebyprodError, RuntimeError):
    """Raised when an LP or cutting-plane solve fails to produce a trustworthy result."""


class GridInfeasibleError(ChebyprodError):
    """Raised when a primal atom grid admits no distribution matching the moments."""
