"""
Worst-case value-at-risk of fixed-mix portfolios.

A fixed-mix strategy rebalances to weights w every period, so its terminal
wealth is the product of the per-period growth factors 1 + w.r_t. With
serially uncorrelated returns these factors share mean 1 + w.mu_hat and
variance w.Sigma_hat.w, and the left product bound gives the largest wealth
level that is reached with probability at least 1 - epsilon under every
distribution consistent with those moments.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from chebyprod import analytic
from chebyprod.config_loader import SolverSettings
from chebyprod.errors import InvalidSpecError
from chebyprod.moments import MomentSpec, require_slater
from chebyprod.product_bounds import LEFT, BoundQuery, CutCache, left_bound

DETERMINISTIC = "deterministic"
ABSORPTION = "absorption"
RUIN = "ruin"

SIMPLEX_TOL = 1e-12
BRACKET_SIGMAS = 6.0
BRACKET_EXPANSIONS = 60


@dataclass(frozen=True)
class ReturnPanel:
    asset_names: tuple
    returns: np.ndarray

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float)
        if returns.ndim != 2:
            raise InvalidSpecError("Returns must be a periods x assets matrix")
        periods, assets = returns.shape
        if periods < 2 or assets < 1:
            raise InvalidSpecError(f"Need at least 2 periods and 1 asset, got {periods} x {assets}")
        if len(self.asset_names) != assets:
            raise InvalidSpecError(f"{len(self.asset_names)} asset names for {assets} return columns")
        if not np.all(np.isfinite(returns)):
            raise InvalidSpecError("Returns contain missing or non-finite entries")
        if np.any(returns < -1.0):
            raise InvalidSpecError("A relative price change below -1 would make a price negative")
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))

    @property
    def periods(self) -> int:
        return self.returns.shape[0]

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "ReturnPanel":
        return cls(tuple(str(c) for c in frame.columns), frame.to_numpy(dtype=float))

    @classmethod
    def from_csv(cls, path: str) -> "ReturnPanel":
        """
        Reads a CSV with a header row of asset names and one row of decimal returns per period.

        :raises: InvalidSpecError on missing values or non-numeric entries.
        """
        frame = pd.read_csv(path, comment="#")
        try:
            frame = frame.apply(pd.to_numeric)
        except ValueError as e:
            raise InvalidSpecError(f"Non-numeric return in {path}: {e}") from e
        if frame.isna().any().any():
            raise InvalidSpecError(f"Missing returns in {path}")
        logging.debug("Loaded %d periods of %d assets from %s", len(frame), frame.shape[1], path)
        return cls.from_frame(frame)


@dataclass(frozen=True)
class FixedMixPortfolio:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0 or np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > SIMPLEX_TOL * max(1, w.size):
            raise InvalidSpecError(f"Weights must be non-negative and sum to 1, got {w}")
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    def format(self) -> str:
        return ";".join(f"{v:.10g}" for v in self.weights)


def estimate_moments(panel: ReturnPanel) -> tuple:
    """Sample mean vector and unbiased sample covariance matrix."""
    frame = pd.DataFrame(panel.returns, columns=list(panel.asset_names))
    return frame.mean().to_numpy(), frame.cov(ddof=1).to_numpy()


def wealth_spec(portfolio: FixedMixPortfolio, mean, cov, horizon: int, rho: float = 0.0) -> MomentSpec:
    """
    Moment data of the T = horizon growth factors of a fixed-mix portfolio.
    The result has sigma = 0 when the portfolio variance vanishes.
    """
    if horizon < 2:
        raise InvalidSpecError(f"The horizon must be at least 2 periods, got {horizon}")
    w = portfolio.weights
    variance = float(w @ np.asarray(cov) @ w)
    return MomentSpec(horizon, 1.0 + float(w @ np.asarray(mean)), math.sqrt(max(variance, 0.0)), rho)


@dataclass(frozen=True)
class WVaRResult:
    value: float
    horizon: int
    tag: str = None
    bracket: tuple = None
    evaluations: int = 0

    @property
    def growth_rate(self) -> float:
        """log(WVaR) / T, the worst-case per-period growth rate."""
        return math.log(self.value) / self.horizon if self.value > 0 else -math.inf

    def to_dict(self) -> dict:
        return {"value": self.value, "tag": self.tag, "bracket": self.bracket,
                "evaluations": self.evaluations, "growth_rate": self.growth_rate}


def worst_case_var(spec: MomentSpec, epsilon: float, settings: SolverSettings = None,
                   cache: CutCache = None) -> WVaRResult:
    """
    sup {gamma : L(gamma) <= epsilon}, by geometric bisection on the
    nondecreasing left bound.

    :param spec: Moment data of the growth factors; sigma = 0 is allowed.
    :param epsilon: Risk level in (0, 1).
    :return: WVaRResult. The tag is "deterministic" for sigma = 0 (value mu^T),
             "absorption" when L is 1 for every gamma (value 0) and "ruin" when
             L exceeds epsilon even at vanishing gamma (value 0).
    :raises: InvalidSpecError, InfeasibleSpecError, SolverError.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidSpecError(f"epsilon must lie in (0, 1), got {epsilon}")
    settings = settings or SolverSettings()
    if spec.is_degenerate:
        if spec.mu <= 0:
            raise InvalidSpecError(f"mu must be positive, got {spec.mu}")
        return WVaRResult(math.exp(spec.T * math.log(spec.mu)), spec.T, DETERMINISTIC)
    require_slater(spec)
    if analytic.is_absorbed(spec):
        logging.warning("T=%d exceeds the absorption threshold %.4g: worst-case wealth is 0",
                        spec.T, analytic.absorption_threshold(spec))
        return WVaRResult(0.0, spec.T, ABSORPTION)

    cache = cache if cache is not None else CutCache()
    evaluations = 0

    def left(gamma: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return left_bound(BoundQuery(spec, gamma, LEFT), settings, cache=cache).value

    T = spec.T
    base = spec.mu - BRACKET_SIGMAS * spec.sigma
    lo = math.exp(T * math.log(base)) if base > 0 else math.exp(T * math.log(spec.mu) - 10.0)
    hi = math.exp(T * math.log(spec.mu + BRACKET_SIGMAS * spec.sigma))
    for _ in range(BRACKET_EXPANSIONS):
        if left(lo) <= epsilon:
            break
        hi = lo
        lo /= 10.0
    else:
        logging.warning("L(%.3g) still exceeds epsilon=%g, worst-case wealth reported as 0", lo, epsilon)
        return WVaRResult(0.0, T, RUIN, (0.0, lo), evaluations)
    for _ in range(BRACKET_EXPANSIONS):
        if left(hi) > epsilon:
            break
        lo = hi
        hi *= 10.0

    while hi / lo - 1.0 > settings.bisect_tol:
        mid = math.sqrt(lo * hi)
        if left(mid) <= epsilon:
            lo = mid
        else:
            hi = mid
    logging.debug("WVaR bracket [%.10g, %.10g] after %d bound evaluations", lo, hi, evaluations)
    return WVaRResult(lo, T, None, (lo, hi), evaluations)


@dataclass(frozen=True)
class FrankWolfeResult:
    weights: np.ndarray
    converged: bool
    iterations: int
    gap: float


def frank_wolfe(cov, mean, tau: float, max_iterations: int = 10_000, tol: float = 1e-10,
                step_rule: str = "away") -> FrankWolfeResult:
    """
    Minimises w.cov.w - tau * w.mean over the unit simplex.

    :param step_rule: "away" uses away steps with exact line search;
                      "open_loop" uses the plain step 2/(k+2).
    :return: FrankWolfeResult; `converged` is False when the gap is still above tol at the cap.
    """
    cov = np.asarray(cov, dtype=float)
    mean = np.asarray(mean, dtype=float)
    n = mean.size
    w = np.full(n, 1.0 / n)
    gap = math.inf
    for k in range(max_iterations):
        grad = 2.0 * cov @ w - tau * mean
        s = int(np.argmin(grad))
        gap = float(grad @ w - grad[s])
        if gap < tol:
            return FrankWolfeResult(w, True, k, gap)
        toward = -w.copy()
        toward[s] += 1.0
        if step_rule == "open_loop":
            w = w + 2.0 / (k + 2.0) * toward
            continue

        active = np.flatnonzero(w > 0.0)
        v = int(active[np.argmax(grad[active])])
        away_gap = float(grad[v] - grad @ w)
        if gap >= away_gap or w[v] >= 1.0:
            direction, max_step = toward, 1.0
        else:
            direction = w.copy()
            direction[v] -= 1.0
            max_step = w[v] / (1.0 - w[v])
        slope = float(grad @ direction)
        curvature = 2.0 * float(direction @ cov @ direction)
        step = max_step if curvature <= 0.0 else min(max_step, -slope / curvature)
        w = w + step * direction
        w[w < SIMPLEX_TOL * 1e-3] = 0.0
        w /= w.sum()
    logging.warning("Frank-Wolfe stopped at the %d-iteration cap with gap %.3g (tau=%g)",
                    max_iterations, gap, tau)
    return FrankWolfeResult(w, False, max_iterations, gap)


def minimum_variance_portfolio(cov) -> FixedMixPortfolio:
    cov = np.asarray(cov, dtype=float)
    return FixedMixPortfolio(frank_wolfe(cov, np.zeros(cov.shape[0]), 0.0).weights)


def max_expectation_portfolio(mean) -> FixedMixPortfolio:
    mean = np.asarray(mean, dtype=float)
    w = np.zeros(mean.size)
    w[int(np.argmax(mean))] = 1.0
    return FixedMixPortfolio(w)


def vertex_tau(mean, cov) -> float:
    """Smallest tau at which the highest-mean asset alone minimises w.cov.w - tau * w.mean."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    best = int(np.argmax(mean))
    tau = 0.0
    for j in range(mean.size):
        if mean[j] < mean[best]:
            tau = max(tau, 2.0 * (cov[best, best] - cov[j, best]) / (mean[best] - mean[j]))
    return tau


@dataclass(frozen=True)
class FrontierPoint:
    tau: float
    portfolio: FixedMixPortfolio
    mean: float
    stdev: float
    wvar: WVaRResult

    @property
    def growth_rate(self) -> float:
        return self.wvar.growth_rate

    def to_row(self) -> dict:
        return {
            "tau": self.tau,
            "weights": self.portfolio.format(),
            "mean": self.mean,
            "stdev": self.stdev,
            "wvar": self.wvar.value,
            "growth_rate": self.growth_rate,
            "tag": self.wvar.tag or "",
        }


def _frontier_point(tau, mean, cov, horizon, epsilon, settings, rho):
    result = frank_wolfe(cov, mean, tau)
    if not result.converged:
        logging.warning("Skipping frontier point tau=%g: Frank-Wolfe did not converge", tau)
        return None
    portfolio = FixedMixPortfolio(result.weights)
    spec = wealth_spec(portfolio, mean, cov, horizon, rho)
    return FrontierPoint(tau, portfolio, spec.mu, spec.sigma, worst_case_var(spec, epsilon, settings))


def frontier_sweep(mean, cov, horizon: int, epsilon: float, n_points: int, tau_max: float = None,
                   settings: SolverSettings = None, rho: float = 0.0) -> list:
    """
    Walks the mean-variance frontier of the simplex on an even tau grid over
    [0, tau_max] and evaluates the WVaR of each portfolio. tau_max defaults
    to the value where the highest-mean asset takes the whole portfolio.

    :return: FrontierPoint list ordered by tau, without the points that failed to converge.
    """
    if n_points < 2:
        raise InvalidSpecError(f"n_points must be at least 2, got {n_points}")
    settings = settings or SolverSettings()
    if tau_max is None:
        tau_max = vertex_tau(mean, cov) or 1.0
    taus = np.linspace(0.0, tau_max, n_points)
    points = Parallel(n_jobs=max(settings.threads, 1))(
        delayed(_frontier_point)(float(tau), mean, cov, horizon, epsilon, settings, rho) for tau in taus)
    return [p for p in points if p is not None]


def best_frontier_point(points: list) -> FrontierPoint:
    return max(points, key=lambda p: p.wvar.value)
