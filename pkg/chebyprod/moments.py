import logging
import math
from dataclasses import asdict, dataclass

from chebyprod.errors import InfeasibleSpecError, InvalidSpecError


@dataclass(frozen=True)
class MomentSpec:
    """
    Permutation-symmetric moment data of T non-negative random variables.

    Every variable has mean mu and standard deviation sigma, and every pair of
    distinct variables has correlation rho. The value is not checked on
    construction; use `validate` for that.
    """
    T: int
    mu: float
    sigma: float
    rho: float

    @property
    def theta(self) -> float:
        return 1.0 + (self.T - 1) * self.rho

    @property
    def cross_moment(self) -> float:
        """E[xi_i xi_j] for i != j."""
        return self.mu ** 2 + self.rho * self.sigma ** 2

    @property
    def second_moment(self) -> float:
        """E[xi_i^2]."""
        return self.mu ** 2 + self.sigma ** 2

    @property
    def is_degenerate(self) -> bool:
        return self.sigma == 0.0

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSpec":
        """
        Builds a spec from a JSON-style mapping {"T":.., "mu":.., "sigma":.., "rho":..}.

        :param data: Mapping with the four keys.
        :return: The MomentSpec.
        :raises: InvalidSpecError if a key is missing or has the wrong type.
        """
        try:
            T = data["T"]
            if isinstance(T, bool) or int(T) != T:
                raise InvalidSpecError(f"T must be an integer, got {T!r}")
            return cls(int(T), float(data["mu"]), float(data["sigma"]), float(data.get("rho", 0.0)))
        except KeyError as e:
            raise InvalidSpecError(f"Missing moment field {e}") from e
        except (TypeError, ValueError) as e:
            if isinstance(e, InvalidSpecError):
                raise
            raise InvalidSpecError(f"Malformed moment data {data!r}: {e}") from e

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ValidationReport:
    feasible: bool
    slater_strict: bool
    theta: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_structure(spec: MomentSpec) -> None:
    """
    Checks the structural bounds T >= 2, mu > 0, sigma > 0 and -1/(T-1) < rho < 1.

    :raises: InvalidSpecError naming the first violated bound.
    """
    if spec.T < 2:
        raise InvalidSpecError(f"T must be at least 2, got {spec.T}")
    if not math.isfinite(spec.mu) or spec.mu <= 0:
        raise InvalidSpecError(f"mu must be positive, got {spec.mu}")
    if not math.isfinite(spec.sigma) or spec.sigma <= 0:
        raise InvalidSpecError(f"sigma must be positive, got {spec.sigma}")
    lower = -1.0 / (spec.T - 1)
    if not (lower < spec.rho < 1.0):
        raise InvalidSpecError(
            f"rho must lie in ({lower:.6g}, 1) for T={spec.T}, got {spec.rho}")


def validate(spec: MomentSpec) -> ValidationReport:
    """
    Validates the spec and reports whether its ambiguity set is non-empty.

    Structural bounds are checked first and raise. The non-emptiness
    condition mu^2 + rho*sigma^2 >= 0 is evaluated exactly on the inputs.

    :param spec: The moment data.
    :return: ValidationReport with feasibility, Slater strictness and theta.
    :raises: InvalidSpecError on structural violations.
    """
    check_structure(spec)
    margin = spec.cross_moment
    report = ValidationReport(feasible=margin >= 0, slater_strict=margin > 0, theta=spec.theta)
    logging.debug("Validated %s: %s", spec, report)
    return report


def require_slater(spec: MomentSpec) -> ValidationReport:
    """
    Validates the spec and insists on strict feasibility, the regime where
    the dual programs are exact.

    :raises: InvalidSpecError on structural violations,
             InfeasibleSpecError if mu^2 + rho*sigma^2 <= 0.
    """
    report = validate(spec)
    if not report.feasible:
        logging.error("Infeasible moment data %s", spec)
        raise InfeasibleSpecError(
            f"No non-negative distribution exists: need mu^2 + rho*sigma^2 >= 0, "
            f"got {spec.cross_moment:.6g}")
    if not report.slater_strict:
        logging.error("Moment data %s sits on the boundary of the moment cone", spec)
        raise InfeasibleSpecError(
            "mu^2 + rho*sigma^2 = 0: the ambiguity set is non-empty but not Slater-strict, "
            "bounds are only computed when mu^2 + rho*sigma^2 > 0")
    return report


def covariance_eigenvalues(spec: MomentSpec) -> tuple:
    """
    Eigenvalues of Sigma = (1-rho) sigma^2 I + rho sigma^2 11^T.

    :return: ((1-rho) sigma^2, (1-rho) sigma^2 + T rho sigma^2) with multiplicities T-1 and 1.
    """
    base = (1.0 - spec.rho) * spec.sigma ** 2
    return base, base + spec.T * spec.rho * spec.sigma ** 2


def root_T(value: float, T: float) -> float:
    """value ** (1/T) computed in log space."""
    if value <= 0:
        return 0.0
    return math.exp(math.log(value) / T)
