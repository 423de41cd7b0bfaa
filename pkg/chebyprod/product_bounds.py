"""
Worst-case probabilities of the product events {prod xi <= gamma} (left tail,
L) and {prod xi >= gamma} (right tail, R) over the permutation-symmetric
ambiguity set.

Both are computed as semi-infinite programs over the symmetric dual vector
(alpha, beta, gamma1, gamma2). The quadratic families run over the sum
s = sum(xi). The polynomial family checks the boundary of the product event
along two-level points, as l(kappa) >= 0 for kappa >= 0.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from chebyprod import analytic
from chebyprod.config_loader import SolverSettings
from chebyprod.errors import InvalidSpecError
from chebyprod.events import Event
from chebyprod.moments import MomentSpec, require_slater, root_T
from chebyprod.sip import Cut, DualPoint, PolynomialFamily, QuadraticFamily, solve_sip

LEFT = "left"
RIGHT = "right"

ABSORPTION = "absorption"
TRIVIAL_REGION = "trivial_region"
RELAXED_EXACT = "relaxed_exact"

CACHEABLE = ("C1", "C2")
CACHE_LIMIT = 400
MAX_LOG_COORDINATE = 700.0


@dataclass(frozen=True)
class BoundQuery:
    spec: MomentSpec
    gamma: float
    side: str

    def __post_init__(self):
        if self.side not in (LEFT, RIGHT):
            raise InvalidSpecError(f"side must be '{LEFT}' or '{RIGHT}', got {self.side!r}")
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise InvalidSpecError(f"gamma must be positive, got {self.gamma}")

    @property
    def event(self) -> Event:
        return Event("product", "leq" if self.side == LEFT else "geq", self.gamma)

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "gamma": self.gamma, "side": self.side}


@dataclass(frozen=True)
class BoundResult:
    value: float
    dual: DualPoint = None
    shortcut: str = None
    iterations: int = 0
    max_violation: float = 0.0
    raw_value: float = None
    cut_counts: dict = field(default_factory=dict)
    cuts: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "shortcut": self.shortcut,
            "dual": None if self.dual is None else self.dual.to_dict(),
            "diagnostics": {
                "iterations": self.iterations,
                "max_violation": self.max_violation,
                "raw_value": self.raw_value,
                "cuts": self.cut_counts,
            },
        }


def bound_result(value: float, **kwargs) -> BoundResult:
    return BoundResult(min(max(value, 0.0), 1.0), raw_value=value, **kwargs)


class CutCache:
    """
    Cuts of the gamma-independent families C1 and C2, kept per (side, T) so
    that sweeps and bisections over gamma start from a populated master.
    """

    def __init__(self):
        self._cuts = {}

    def warm(self, side: str, T: int) -> list:
        return list(self._cuts.get((side, T), {}).values())

    def store(self, side: str, T: int, cuts) -> None:
        bucket = self._cuts.setdefault((side, T), {})
        for cut in cuts:
            if cut.family in CACHEABLE and len(bucket) < CACHE_LIMIT:
                bucket.setdefault((cut.family, round(cut.witness, 10)), cut)

    def __len__(self):
        return sum(len(b) for b in self._cuts.values())


def dual_objective(spec: MomentSpec) -> np.ndarray:
    """Objective of the symmetric dual: (1, T mu, T(mu^2+sigma^2), T[T mu^2 + sigma^2 + (T-1) rho sigma^2])."""
    T, mu, sigma, rho = spec.T, spec.mu, spec.sigma, spec.rho
    return np.array([
        1.0,
        T * mu,
        T * (mu ** 2 + sigma ** 2),
        T * (T * mu ** 2 + sigma ** 2 + (T - 1) * rho * sigma ** 2),
    ])


@dataclass(frozen=True)
class TailPolynomial:
    """
    l(kappa) = sum_i (coefs[i] . x + consts[i]) kappa^i, affine in x = (alpha, beta, gamma1, gamma2).
    `scale` is the natural root scale gamma^(1/(T(T-1))).
    """
    coefs: np.ndarray
    consts: np.ndarray
    scale: float

    @property
    def degrees(self) -> tuple:
        nonzero = np.any(self.coefs != 0, axis=1) | (self.consts != 0)
        return tuple(int(i) for i in np.flatnonzero(nonzero))

    def at(self, dual) -> np.ndarray:
        x = dual.as_array() if isinstance(dual, DualPoint) else np.asarray(dual, dtype=float)
        return self.coefs @ x + self.consts


def tail_polynomial_coeffs(spec: MomentSpec, gamma: float) -> TailPolynomial:
    """
    Coefficients of l(kappa): the boundary point with one coordinate at
    kappa^(T-1) and T-1 coordinates at c/kappa, c = gamma^(1/(T-1)),
    substituted into alpha + beta s + gamma2 s^2 + gamma1 ||xi||^2 - 1 and
    multiplied by kappa^2. For T = 2 the degree-T terms merge into degree 2.
    """
    T = spec.T
    if T < 2:
        raise InvalidSpecError(f"T must be at least 2, got {T}")
    if gamma <= 0:
        raise InvalidSpecError(f"gamma must be positive, got {gamma}")
    c = root_T(gamma, T - 1)
    coefs = np.zeros((2 * T + 1, 4))
    consts = np.zeros(2 * T + 1)
    coefs[0] += [0.0, 0.0, (T - 1) * c ** 2, (T - 1) ** 2 * c ** 2]
    coefs[1] += [0.0, (T - 1) * c, 0.0, 0.0]
    coefs[2] += [1.0, 0.0, 0.0, 0.0]
    consts[2] = -1.0
    coefs[T] += [0.0, 0.0, 0.0, 2.0 * (T - 1) * c]
    coefs[T + 1] += [0.0, 1.0, 0.0, 0.0]
    coefs[2 * T] += [0.0, 0.0, 1.0, 1.0]
    return TailPolynomial(coefs, consts, root_T(c, T))


def tail_polynomial(spec: MomentSpec, gamma: float, dual) -> np.ndarray:
    """Coefficient vector of l(kappa) at a dual point."""
    return tail_polynomial_coeffs(spec, gamma).at(dual)


def _quadratic_rows(weight: float) -> list:
    # alpha + beta s + (gamma2 + weight * gamma1) s^2
    return [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, weight, 1.0]]


def sum_seeds(spec: MomentSpec, gamma: float, lo: float = 0.0, hi: float = math.inf) -> tuple:
    pivot = spec.T * root_T(gamma, spec.T)
    seeds = [lo] + [pivot * 2.0 ** k for k in range(-2, 3)]
    if math.isfinite(hi):
        seeds.append(hi)
    return tuple(seeds)


def build_families(query: BoundQuery) -> list:
    """The four constraint families of the left or right program."""
    spec, gamma = query.spec, query.gamma
    T = spec.T
    pivot = T * root_T(gamma, T)
    tail = tail_polynomial_coeffs(spec, gamma)
    kappa_seeds = (0.0,) + tuple(tail.scale * 2.0 ** k for k in range(-2, 3))
    c1 = QuadraticFamily("C1", _quadratic_rows(1.0 / T), rhs=0.0, seeds=sum_seeds(spec, gamma))
    polynomial = PolynomialFamily("C4" if query.side == RIGHT else "C3b", tail.coefs, tail.consts,
                                  rhs=0.0, seeds=kappa_seeds, scale=tail.scale)
    if query.side == LEFT:
        return [
            c1,
            QuadraticFamily("C2", _quadratic_rows(1.0), rhs=1.0, seeds=sum_seeds(spec, gamma)),
            QuadraticFamily("C3a", _quadratic_rows(1.0 / T), rhs=1.0, lo=0.0, hi=pivot,
                            seeds=sum_seeds(spec, gamma, 0.0, pivot)),
            polynomial,
        ]
    return [
        c1,
        QuadraticFamily("C2", _quadratic_rows(1.0), rhs=0.0, seeds=sum_seeds(spec, gamma)),
        QuadraticFamily("C3", _quadratic_rows(1.0 / T), rhs=1.0, lo=pivot,
                        seeds=sum_seeds(spec, gamma, pivot)),
        polynomial,
    ]


def witness_point(query: BoundQuery, cut: Cut):
    """
    The support point whose moment vector (1, s, ||xi||^2, s^2) the cut row is
    a positive multiple of. None for linear cuts and for the kappa = 0 limit of
    the polynomial family.
    """
    T, s = query.spec.T, cut.witness
    if cut.family in ("C1", "C3a", "C3"):
        return (s / T,) * T
    if cut.family == "C2":
        return (s,) + (0.0,) * (T - 1)
    if cut.family in ("C3b", "C4") and s > 0:
        log_head = (T - 1) * math.log(s)
        if log_head > MAX_LOG_COORDINATE:
            return None
        return (math.exp(log_head),) + (root_T(query.gamma, T - 1) / s,) * (T - 1)
    return None


def _solve(query: BoundQuery, settings: SolverSettings, linear_cuts=(), cache: CutCache = None) -> BoundResult:
    families = build_families(query)
    warm = cache.warm(query.side, query.spec.T) if cache is not None else ()
    result = solve_sip(
        dual_objective(query.spec), families,
        feas_tol=settings.feas_tol, gap_tol=settings.gap_tol,
        trust_radius0=settings.trust_radius, trust_radius_cap=settings.trust_radius_cap,
        max_iterations=settings.max_iterations, lp_tol=settings.lp_tol,
        linear_cuts=linear_cuts, warm_cuts=warm)
    if cache is not None:
        cache.store(query.side, query.spec.T, result.cuts)
    logging.debug("%s bound at gamma=%.6g: %.10g after %d iterations",
                  query.side, query.gamma, result.value, result.iterations)
    return bound_result(result.value, dual=result.dual, iterations=result.iterations,
                        max_violation=result.max_violation, cut_counts=result.cut_counts,
                        cuts=result.cuts)


def left_bound(query: BoundQuery, settings: SolverSettings = None, use_shortcuts: bool = True,
               gamma1_nonnegative: bool = False, cache: CutCache = None) -> BoundResult:
    """
    L(gamma) = sup P(prod xi <= gamma).

    :param query: A left-side BoundQuery on a Slater-strict spec.
    :param settings: Solver tolerances; defaults when None.
    :param use_shortcuts: Return 1 without solving when T exceeds the absorption threshold.
    :param gamma1_nonnegative: Add gamma1 >= 0 to the master (the relaxed left bound).
    :param cache: Optional CutCache shared across gamma values.
    :return: BoundResult.
    :raises: InvalidSpecError, InfeasibleSpecError, SolverError.
    """
    if query.side != LEFT:
        raise InvalidSpecError("left_bound needs a left-side query")
    require_slater(query.spec)
    settings = settings or SolverSettings()
    if use_shortcuts and analytic.is_absorbed(query.spec):
        return bound_result(1.0, dual=DualPoint(1.0, 0.0, 0.0, 0.0), shortcut=ABSORPTION)
    linear = ()
    if gamma1_nonnegative:
        linear = (Cut((0.0, 0.0, 1.0, 0.0), 0.0, "gamma1_nonnegative", 0.0),)
    return _solve(query, settings, linear, cache)


def right_bound(query: BoundQuery, settings: SolverSettings = None, use_shortcuts: bool = True,
                cache: CutCache = None) -> BoundResult:
    """
    R(gamma) = sup P(prod xi >= gamma).

    Shortcuts, in order: R = 1 when rho >= 0 and gamma <= mu^T; R equals the
    relaxed closed form when gamma >= gamma_bar.

    :raises: InvalidSpecError, InfeasibleSpecError, SolverError.
    """
    if query.side != RIGHT:
        raise InvalidSpecError("right_bound needs a right-side query")
    spec = query.spec
    require_slater(spec)
    settings = settings or SolverSettings()
    if use_shortcuts:
        if spec.rho >= 0 and root_T(query.gamma, spec.T) <= spec.mu:
            return bound_result(1.0, dual=DualPoint(1.0, 0.0, 0.0, 0.0), shortcut=TRIVIAL_REGION)
        threshold = analytic.gamma_bar_threshold(spec)
        if threshold.hypothesis_holds and math.log(query.gamma) >= threshold.log_value:
            relaxed = analytic.relaxed_right_bound(spec, query.gamma)
            return bound_result(relaxed.value, shortcut=RELAXED_EXACT)
    return _solve(query, settings, (), cache)


def product_bound(query: BoundQuery, settings: SolverSettings = None, **kwargs) -> BoundResult:
    if query.side == LEFT:
        return left_bound(query, settings, **kwargs)
    return right_bound(query, settings, **kwargs)


def certify_dual(query: BoundQuery, dual, n_samples: int = 10_000) -> float:
    """
    Re-checks a dual point on sampled uncertainty values of every family.

    :return: The smallest normalised slack found; negative values are violations.
    """
    x = dual.as_array() if isinstance(dual, DualPoint) else np.asarray(dual, dtype=float)
    families = build_families(query)
    per_family = max(n_samples // len(families), 10)
    worst = math.inf
    for family in families:
        if math.isfinite(family.hi):
            samples = np.linspace(family.lo, family.hi, per_family)
        else:
            base = max(family.lo, family.scale)
            half = per_family // 2
            samples = np.concatenate([
                np.linspace(family.lo, family.lo + 10.0 * base, half),
                family.lo + np.geomspace(1e-6 * base, 1e6 * base, per_family - half),
            ])
        for s in samples:
            cut = family.cut_at(float(s), x)
            if cut is not None:
                worst = min(worst, -cut.violation)
    return worst
