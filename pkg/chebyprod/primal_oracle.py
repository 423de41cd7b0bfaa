"""
Primal side of the bounds: explicit distributions in the ambiguity set and
lower bounds on worst-case event probabilities from an LP over a grid of
symmetric atom families.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from chebyprod import analytic, geometry
from chebyprod.distribution import DiscreteSymmetricDistribution, OneDistinct, Uniform, clamp
from chebyprod.errors import GridInfeasibleError, InfeasibleSpecError, InvalidSpecError, SolverError
from chebyprod.events import Event
from chebyprod.lp import INFEASIBLE, LinearProgram, solve_lp
from chebyprod.moments import MomentSpec, require_slater, root_T, validate
from chebyprod.product_bounds import BoundQuery, BoundResult, witness_point

__all__ = [
    "DiscreteSymmetricDistribution", "OneDistinct", "Uniform", "PrimalBound",
    "feasibility_distribution", "event_probability", "special_atoms", "witness_atoms", "lower_bound_lp",
]

# Witness coordinates beyond this many times mu + span * sigma are left out.
WITNESS_CAP = 1e2


@dataclass(frozen=True)
class PrimalBound:
    value: float
    distribution: DiscreteSymmetricDistribution
    candidates: int
    max_residual: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "candidates": self.candidates,
            "max_residual": self.max_residual,
            "distribution": self.distribution.to_dict(),
        }


def _mixing_weight(spec: MomentSpec) -> float:
    T, mu, sigma, rho, theta = spec.T, spec.mu, spec.sigma, spec.rho, spec.theta
    if rho > 0:
        return min(T * mu ** 2 / (T * mu ** 2 + theta * sigma ** 2), rho * T / theta)
    if rho == 0:
        return T * mu ** 2 / (T * mu ** 2 + sigma ** 2)
    return -rho * T / (1.0 - rho)


def feasibility_distribution(spec: MomentSpec) -> DiscreteSymmetricDistribution:
    """
    A member of the ambiguity set: OneDistinct(x, y) with probability p and
    Uniform(z) with probability 1-p. The weight p is picked by the sign of rho
    so that y and z stay non-negative.

    :raises: InvalidSpecError on structural violations, InfeasibleSpecError if mu^2 + rho*sigma^2 < 0.
    """
    if not validate(spec).feasible:
        logging.error("No distribution exists for %s", spec)
        raise InfeasibleSpecError(
            f"No non-negative distribution exists: need mu^2 + rho*sigma^2 >= 0, got {spec.cross_moment:.6g}")
    T, mu, sigma, rho, theta = spec.T, spec.mu, spec.sigma, spec.rho, spec.theta
    p = _mixing_weight(spec)
    m1 = mu + sigma * math.sqrt((1.0 - p) * theta / (p * T))
    spread = (1.0 - rho) * (T - 1) * sigma ** 2 / (p * T)
    z = mu - sigma * math.sqrt(p * theta / ((1.0 - p) * T))
    x = m1 + math.sqrt((T - 1) * spread)
    y = m1 - math.sqrt(spread / (T - 1))
    return DiscreteSymmetricDistribution(T, [OneDistinct(x, clamp(y), p), Uniform(clamp(z), 1.0 - p)])


def event_probability(distribution: DiscreteSymmetricDistribution, event: Event) -> float:
    return distribution.event_probability(event)


def _as_family(point, prob: float = 0.0):
    """Uniform or OneDistinct family through `point`, or None if it has another shape."""
    values = sorted(set(round(v, 15) for v in point))
    if len(values) == 1:
        return Uniform(float(point[0]), prob)
    if len(values) != 2:
        return None
    for single in values:
        if sum(1 for v in point if round(v, 15) == single) == 1:
            rest = next(v for v in point if round(v, 15) != single)
            x = next(v for v in point if round(v, 15) == single)
            return OneDistinct(float(x), float(rest), prob)
    return None


def special_atoms(spec: MomentSpec, event: Event) -> list:
    """
    Atom families known to matter for the event: the feasibility construction,
    the extremal laws where they exist, two-level minimisers of the product
    and atoms on the event boundary.
    """
    families = list(feasibility_distribution(spec).families)
    if event.kind == "product":
        root = root_T(event.gamma, spec.T)
        families.append(Uniform(root, 0.0))
        if event.side == "geq" and root > spec.mu:
            families.extend(analytic.extremal_distribution(spec, event.gamma).families)
            threshold = analytic.gamma_bar_threshold(spec)
            if threshold.hypothesis_holds and math.log(event.gamma) >= threshold.log_value:
                families.extend(analytic.perturbed_extremal_distribution(spec, event.gamma).families)
        if event.side == "leq" and analytic.is_absorbed(spec):
            families.extend(analytic.absorbing_distribution(spec).families)
        for scale in (0.5, 1.0, 2.0):
            m1 = spec.mu * scale
            for ratio in (1.0 + 0.5 / spec.T, spec.T / (spec.T - 1.0), 0.5 * (1.0 + spec.T)):
                witness = geometry.min_product_given_means(spec.T, m1, ratio * m1 ** 2)
                if witness.feasible:
                    family = _as_family(witness.witness)
                    if family is not None:
                        families.append(family)
    elif event.kind in ("min", "max"):
        families.append(Uniform(event.gamma, 0.0))
    else:
        families.append(Uniform(event.gamma / spec.T, 0.0))
    return families


def witness_atoms(query: BoundQuery, dual: BoundResult, span_sigmas: float = 6.0) -> list:
    """
    Atom families at the cut witnesses of a solved dual. The final master LP is
    a moment-matching mixture over these points, so offering them to
    `lower_bound_lp` lets the primal reach the dual value whenever the
    supremum is attained at finite points.
    """
    cap = WITNESS_CAP * (query.spec.mu + span_sigmas * query.spec.sigma)
    families = []
    for cut in dual.cuts:
        point = witness_point(query, cut)
        if point is None or max(point) > cap:
            continue
        family = _as_family(point)
        if family is not None:
            families.append(family)
    return families


def _boundary_atoms(spec: MomentSpec, event: Event, grid: np.ndarray, cap: float) -> list:
    T, g = spec.T, event.gamma
    atoms = []
    for y in grid:
        if event.kind == "product":
            if y <= 0:
                continue
            x = math.exp(math.log(g) - (T - 1) * math.log(y))
        elif event.kind == "sum":
            x = g - (T - 1) * y
        else:
            x = g
        if 0.0 <= x <= cap:
            atoms.append(OneDistinct(float(x), float(y), 0.0))
    return atoms


def _candidate_families(spec: MomentSpec, event: Event, grid_points: int, span_sigmas: float,
                        extra_atoms, seed_special: bool) -> list:
    hi = spec.mu + span_sigmas * spec.sigma
    grid = np.concatenate([[0.0], np.geomspace(hi * 1e-3, hi, grid_points)])
    families = [Uniform(float(z), 0.0) for z in grid]
    families += [OneDistinct(float(x), float(y), 0.0) for x in grid for y in grid if x != y]
    if seed_special:
        families += special_atoms(spec, event)
        families += _boundary_atoms(spec, event, grid, 4.0 * hi * spec.T)
    families += list(extra_atoms)

    unique = {}
    for family in families:
        coords = family.representative(spec.T)
        if min(coords) < 0 or not all(math.isfinite(c) for c in coords):
            continue
        key = (family.kind,) + tuple(round(c, 14) for c in coords[:2])
        unique.setdefault(key, family)
    return list(unique.values())


def lower_bound_lp(spec: MomentSpec, event: Event, grid_points: int = 60, span_sigmas: float = 6.0,
                   extra_atoms=(), seed_special: bool = True, lp_tol: float = 1e-9) -> PrimalBound:
    """
    Maximises the event probability over mixtures of gridded atom families that
    match the four moment conditions. The value is a lower bound on the
    worst-case probability.

    :param grid_points: Log-spaced coordinate values per axis on (0, mu + span_sigmas * sigma], plus 0.
    :param extra_atoms: Further Uniform/OneDistinct families to offer the LP.
    :param seed_special: Add the families from `special_atoms` and event-boundary atoms.
    :return: PrimalBound.
    :raises: InfeasibleSpecError, GridInfeasibleError if no mixture matches the moments,
             SolverError on other LP failures.
    """
    require_slater(spec)
    if grid_points < 2:
        raise InvalidSpecError(f"grid_points must be at least 2, got {grid_points}")
    families = _candidate_families(spec, event, grid_points, span_sigmas, extra_atoms, seed_special)
    columns = np.array([(1.0,) + tuple(f.moments(spec.T)) for f in families]).T
    target = np.array([1.0, spec.mu, spec.second_moment, spec.cross_moment])
    indicator = np.array([1.0 if event.holds(f.representative(spec.T)) else 0.0 for f in families])

    result = solve_lp(LinearProgram(-indicator, A_eq=columns, b_eq=target), lp_tol)
    if result.status == INFEASIBLE:
        logging.warning("No distribution on the %d-family grid matches %s", len(families), spec)
        raise GridInfeasibleError(
            f"No feasible grid distribution among {len(families)} atom families; refine the grid")
    if not result.ok:
        raise SolverError(f"Primal grid LP ended with status '{result.status}'")

    chosen = [replace(family, prob=float(prob)) for family, prob in zip(families, result.x) if prob > 0.0]
    distribution = DiscreteSymmetricDistribution(spec.T, chosen)
    value = distribution.event_probability(event)
    logging.debug("Primal grid LP for %s: %.10g over %d candidates", event.name, value, len(families))
    return PrimalBound(value, distribution, len(families), distribution.max_residual(spec))
