"""
Closed-form Chebyshev bounds and the distributions that attain them.

Every bound returns a ClosedFormBound tagging the branch that fired:
"trivial" (the event can be certain), "markov" (the first-moment branch) or
"chebyshev" (the second-moment branch).
"""
import logging
import math
from dataclasses import asdict, dataclass

from chebyprod.distribution import DiscreteSymmetricDistribution, OneDistinct, Uniform, clamp
from chebyprod.errors import InfeasibleSpecError, InvalidSpecError
from chebyprod.moments import MomentSpec, check_structure, require_slater, root_T, validate

TRIVIAL = "trivial"
MARKOV = "markov"
CHEBYSHEV = "chebyshev"


@dataclass(frozen=True)
class ClosedFormBound:
    value: float
    regime: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GammaBar:
    """Threshold above which the relaxed right bound is exact; `root` is gamma_bar^(1/T)."""
    hypothesis_holds: bool
    root: float = None
    value: float = None
    log_value: float = None


def _require_gamma(gamma: float) -> None:
    if not math.isfinite(gamma) or gamma <= 0:
        raise InvalidSpecError(f"gamma must be positive, got {gamma}")


def _require_feasible(spec: MomentSpec) -> None:
    if not validate(spec).feasible:
        raise InfeasibleSpecError(
            f"No non-negative distribution exists: need mu^2 + rho*sigma^2 >= 0, got {spec.cross_moment:.6g}")


def chebyshev_univariate(mu: float, sigma: float, gamma: float, nonnegative: bool = False) -> ClosedFormBound:
    """
    Sharp bound on P(xi >= gamma) for a scalar with mean mu and standard deviation sigma.

    :param nonnegative: Restrict to distributions on [0, inf), which adds the Markov branch.
    :raises: InvalidSpecError if sigma <= 0, or mu <= 0 with nonnegative support.
    """
    if sigma <= 0:
        raise InvalidSpecError(f"sigma must be positive, got {sigma}")
    if nonnegative and mu <= 0:
        raise InvalidSpecError(f"mu must be positive for non-negative support, got {mu}")
    if gamma < mu:
        return ClosedFormBound(1.0, TRIVIAL)
    if nonnegative and gamma < mu + sigma ** 2 / mu:
        return ClosedFormBound(mu / gamma, MARKOV)
    return ClosedFormBound(sigma ** 2 / (sigma ** 2 + (gamma - mu) ** 2), CHEBYSHEV)


def chebyshev_extremal_distribution(mu: float, sigma: float, gamma: float) -> DiscreteSymmetricDistribution:
    """
    Two-point law with mean mu and standard deviation sigma that puts the
    unrestricted Chebyshev mass on gamma (the upper tail for gamma > mu,
    the lower tail for gamma < mu).

    :raises: InvalidSpecError for gamma == mu or sigma <= 0.
    """
    if sigma <= 0:
        raise InvalidSpecError(f"sigma must be positive, got {sigma}")
    if gamma == mu:
        raise InvalidSpecError("The bound at gamma = mu is 1 and is not attained by a two-point law")
    d = abs(gamma - mu)
    p = sigma ** 2 / (sigma ** 2 + d ** 2)
    other = mu - sigma ** 2 / (gamma - mu)
    return DiscreteSymmetricDistribution(1, [Uniform(gamma, p), Uniform(other, 1.0 - p)])


def _sum_tail(T: int, mu: float, sigma: float, theta: float, gamma: float) -> ClosedFormBound:
    variance = T * sigma ** 2 * theta
    if gamma < T * mu:
        return ClosedFormBound(1.0, TRIVIAL)
    return ClosedFormBound(variance / (variance + (gamma - T * mu) ** 2), CHEBYSHEV)


def sum_bound(spec: MomentSpec, gamma: float, side: str, nonnegative: bool = True) -> ClosedFormBound:
    """
    Sharp bound on P(sum xi >= gamma) (side "geq") or P(sum xi <= gamma) (side "leq").

    :param nonnegative: For side "geq", False drops the support restriction and
                        returns the classical two-branch inequality.
    :raises: InvalidSpecError on structural violations or an unknown side,
             InfeasibleSpecError for an empty ambiguity set.
    """
    check_structure(spec)
    _require_feasible(spec)
    _require_gamma(gamma)
    T, mu, theta = spec.T, spec.mu, spec.theta
    variance = T * spec.sigma ** 2 * theta
    if side == "geq":
        if not nonnegative:
            return _sum_tail(T, mu, spec.sigma, theta, gamma)
        if gamma < T * mu:
            return ClosedFormBound(1.0, TRIVIAL)
        if gamma < T * mu + spec.sigma ** 2 * theta / mu:
            return ClosedFormBound(T * mu / gamma, MARKOV)
        return ClosedFormBound(variance / (variance + (gamma - T * mu) ** 2), CHEBYSHEV)
    if side == "leq":
        if gamma >= T * mu:
            return ClosedFormBound(1.0, TRIVIAL)
        return ClosedFormBound(variance / (variance + (gamma - T * mu) ** 2), CHEBYSHEV)
    raise InvalidSpecError(f"side must be 'geq' or 'leq', got {side!r}")


def relaxed_right_bound(spec: MomentSpec, gamma: float) -> ClosedFormBound:
    """
    Worst-case P(prod xi >= gamma) when the second-moment matrix is only
    bounded above by Sigma + mu mu^T in the semidefinite order.
    """
    require_slater(spec)
    _require_gamma(gamma)
    root = root_T(gamma, spec.T)
    s2theta = spec.sigma ** 2 * spec.theta
    if root <= spec.mu:
        return ClosedFormBound(1.0, TRIVIAL)
    if root < spec.mu + s2theta / (spec.T * spec.mu):
        return ClosedFormBound(spec.mu / root, MARKOV)
    return ClosedFormBound(s2theta / (s2theta + spec.T * (spec.mu - root) ** 2), CHEBYSHEV)


def _diagonal_weights(spec: MomentSpec, gamma: float) -> tuple:
    """(p, q, u, v) of the two-atom diagonal law attaining the relaxed right bound."""
    bound = relaxed_right_bound(spec, gamma)
    q = bound.value
    if bound.regime == CHEBYSHEV:
        v = q * spec.mu + spec.sigma * math.sqrt(spec.theta * q * (1.0 - q) / spec.T)
    else:
        v = spec.mu
    return 1.0 - q, q, spec.mu - v, v


def extremal_distribution(spec: MomentSpec, gamma: float) -> DiscreteSymmetricDistribution:
    """
    Two atoms on the diagonal, (u/p) 1 with probability p and (v/q) 1 with
    probability q, attaining the relaxed right bound. The event atom sits
    at gamma^(1/T) 1. In the Markov branch u = 0 and the atom at the origin
    is kept.
    """
    p, q, u, v = _diagonal_weights(spec, gamma)
    if p <= 0.0:
        return DiscreteSymmetricDistribution(spec.T, [Uniform(spec.mu, 1.0)])
    return DiscreteSymmetricDistribution(spec.T, [Uniform(clamp(u / p), p), Uniform(v / q, q)])


def perturbed_extremal_distribution(spec: MomentSpec, gamma: float) -> DiscreteSymmetricDistribution:
    """
    Spreads the lower atom of `extremal_distribution` into a OneDistinct
    family so that the second-moment matrix equals Sigma + mu mu^T exactly.
    The result lies in the exact ambiguity set whenever gamma >= gamma_bar.

    :raises: InvalidSpecError if the gamma_bar hypothesis fails or gamma < gamma_bar.
    """
    threshold = gamma_bar_threshold(spec)
    if not threshold.hypothesis_holds:
        raise InvalidSpecError("mu <= sqrt((1-rho)/T) sigma: no gamma_bar exists for this spec")
    if math.log(gamma) < threshold.log_value * (1.0 - 1e-12):
        raise InvalidSpecError(f"gamma = {gamma:.6g} lies below gamma_bar = {threshold.value:.6g}")
    p, q, u, v = _diagonal_weights(spec, gamma)
    lam = spec.sigma * math.sqrt((1.0 - spec.rho) / (p * spec.T))
    low = u / p
    return DiscreteSymmetricDistribution(spec.T, [
        OneDistinct(low + (spec.T - 1) * lam, clamp(low - lam), p),
        Uniform(v / q, q),
    ])


def absorption_threshold(spec: MomentSpec) -> float:
    """T0 = (mu^2 + sigma^2) / ((1-rho) sigma^2) + 1; beyond it the worst-case left tail is 1 for every gamma."""
    return spec.second_moment / ((1.0 - spec.rho) * spec.sigma ** 2) + 1.0


def is_absorbed(spec: MomentSpec) -> bool:
    return spec.T > absorption_threshold(spec)


def absorbing_distribution(spec: MomentSpec) -> DiscreteSymmetricDistribution:
    """
    A law in the ambiguity set with a zero coordinate in every atom, so that
    P(prod xi <= gamma) = 1 for every gamma > 0.

    :raises: InvalidSpecError unless T > T0.
    """
    require_slater(spec)
    if not is_absorbed(spec):
        raise InvalidSpecError(
            f"T = {spec.T} does not exceed the absorption threshold {absorption_threshold(spec):.6g}")
    T = spec.T
    A = T * spec.cross_moment / (T - 2)
    B = T * spec.second_moment - (T - 1) * A
    S = (T - 1) ** 2 * A + B
    c = T ** 2 * spec.mu ** 2 / S
    top = math.sqrt(S / c)
    p_spread = c * (T - 1) ** 2 * A / S
    p_single = c * B / S
    return DiscreteSymmetricDistribution(T, [
        OneDistinct(0.0, top / (T - 1), p_spread),
        OneDistinct(top, 0.0, p_single),
        Uniform(0.0, 1.0 - p_spread - p_single),
    ])


def gamma_bar_threshold(spec: MomentSpec) -> GammaBar:
    """
    gamma_bar with gamma_bar^(1/T) = mu + (1 + sqrt(4ab sqrt((1-rho)/T) sigma + 1)) / (2ab),
    a = mu - sqrt((1-rho)/T) sigma, b = T / (sigma^2 theta). Requires a > 0.
    """
    require_slater(spec)
    spread = math.sqrt((1.0 - spec.rho) / spec.T) * spec.sigma
    a = spec.mu - spread
    if a <= 0:
        logging.debug("gamma_bar hypothesis fails for %s", spec)
        return GammaBar(False)
    b = spec.T / (spec.sigma ** 2 * spec.theta)
    root = spec.mu + (1.0 + math.sqrt(4.0 * a * b * spread + 1.0)) / (2.0 * a * b)
    log_value = spec.T * math.log(root)
    value = math.exp(log_value) if log_value < 700 else math.inf
    return GammaBar(True, root, value, log_value)


def mo_bound(spec: MomentSpec, gamma: float) -> ClosedFormBound:
    """Multivariate Chebyshev bound on P(prod xi >= gamma) that ignores the support."""
    check_structure(spec)
    _require_feasible(spec)
    _require_gamma(gamma)
    root = root_T(gamma, spec.T)
    if root <= spec.mu:
        return ClosedFormBound(1.0, TRIVIAL)
    s2theta = spec.sigma ** 2 * spec.theta
    return ClosedFormBound(s2theta / (s2theta + spec.T * (spec.mu - root) ** 2), CHEBYSHEV)


def log_space_bound(mu_eta: float, sigma_eta: float, rho_eta: float, T: int, gamma: float) -> ClosedFormBound:
    """
    Bound on P(prod xi >= gamma) from the moments of eta = log(xi): the
    classical sum inequality applied to sum(eta) >= log(gamma).
    """
    _require_gamma(gamma)
    if T < 1:
        raise InvalidSpecError(f"T must be positive, got {T}")
    if sigma_eta <= 0:
        raise InvalidSpecError(f"sigma_eta must be positive, got {sigma_eta}")
    theta = 1.0 + (T - 1) * rho_eta
    if theta <= 0 or rho_eta > 1:
        raise InvalidSpecError(f"rho_eta = {rho_eta} gives a non-positive sum variance for T={T}")
    return _sum_tail(T, mu_eta, sigma_eta, theta, math.log(gamma))
