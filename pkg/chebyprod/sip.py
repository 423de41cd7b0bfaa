"""
Cutting-plane solver for linear semi-infinite programs

    minimize c^T x  s.t.  sum_d (C_d . x + k_d) s^d >= rhs  for all s in [lo, hi]

where every constraint family is polynomial in a scalar uncertainty s and
affine in the decision x.

The restricted master over the cuts collected so far is kept bounded by a box
|x_j| <= R. It is solved through its LP dual, which has one equality row per
decision variable however many cuts accumulate; the master point is read off
the simplex multipliers of those rows.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from chebyprod import poly
from chebyprod.errors import SolverError
from chebyprod.lp import LinearProgram, solve_lp


@dataclass(frozen=True)
class DualPoint:
    alpha: float
    beta: float
    gamma1: float
    gamma2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma1, self.gamma2])

    @classmethod
    def from_array(cls, x) -> "DualPoint":
        return cls(*(float(v) for v in x))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Cut:
    """A linear row `row . x >= rhs`, normalised to unit max-magnitude."""
    row: tuple
    rhs: float
    family: str
    witness: float
    violation: float = 0.0

    def slack(self, x) -> float:
        return float(np.dot(self.row, x)) - self.rhs


@dataclass(frozen=True)
class SeparationResult:
    violation: float
    witness: float = None
    cut: Cut = None
    cuts: tuple = ()

    @property
    def violated(self) -> bool:
        return self.cut is not None and self.violation > 0


class SemiInfiniteConstraint:
    """
    sum_d (coefs[d] . x + consts[d]) s^d >= rhs for every s in [lo, hi].

    The oracle works in the rescaled variable t = s / scale so that
    polynomials whose natural root scale is far from 1 stay well conditioned.
    """

    def __init__(self, label: str, coefs, consts=None, rhs: float = 0.0,
                 lo: float = 0.0, hi: float = math.inf, seeds=(), scale: float = 1.0):
        self.label = label
        self.coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
        degree = self.coefs.shape[0] - 1
        self.consts = np.zeros(degree + 1) if consts is None else np.asarray(consts, dtype=float)
        if self.consts.size != degree + 1:
            raise ValueError(f"{label}: need {degree + 1} constants, got {self.consts.size}")
        if lo > hi:
            raise ValueError(f"{label}: empty domain [{lo}, {hi}]")
        self.rhs = float(rhs)
        self.lo = float(lo)
        self.hi = float(hi)
        self.scale = float(scale)
        self.seeds = tuple(s for s in seeds if self.lo <= s <= self.hi)

    @property
    def degree(self) -> int:
        return self.coefs.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.coefs.shape[1]

    def value(self, x, s: float) -> float:
        """Left-hand side minus rhs at s."""
        powers = s ** np.arange(self.degree + 1)
        return float(powers @ (self.coefs @ np.asarray(x, dtype=float) + self.consts)) - self.rhs

    def cut_at(self, s: float, x=None):
        """The normalised cut for uncertainty value s, or None if its row vanishes."""
        exponents = np.arange(self.degree + 1)
        if s <= 1.0:
            powers = s ** exponents
        else:
            powers = s ** (exponents - self.degree)
        row = powers @ self.coefs
        rhs = self.rhs * powers[0] - float(powers @ self.consts)
        norm = float(np.max(np.abs(row)))
        if norm == 0.0 or not np.isfinite(norm):
            return None
        row = row / norm
        rhs = rhs / norm
        violation = 0.0 if x is None else rhs - float(row @ x)
        return Cut(tuple(row), rhs, self.label, float(s), violation)

    def polynomial(self, x) -> np.ndarray:
        """Coefficients in t = s / scale of the left-hand side minus rhs at x."""
        values = self.coefs @ np.asarray(x, dtype=float) + self.consts
        values[0] -= self.rhs
        return values * self.scale ** np.arange(self.degree + 1)

    def candidates(self, x) -> list:
        """Points t where the constraint is tightest."""
        p = self.polynomial(x)
        lo, hi = self.lo / self.scale, self.hi / self.scale
        best = poly.global_min(p, lo, hi)
        upper = best.argmin if best.unbounded else hi
        points = [lo, best.argmin] + poly.critical_points(p, lo, upper)
        if math.isfinite(hi):
            points.append(hi)
        if best.unbounded:
            points.extend(best.argmin * 2.0 ** k for k in range(1, 61))
        return points

    def separate(self, x) -> SeparationResult:
        x = np.asarray(x, dtype=float)
        cuts = {}
        for t in self.candidates(x):
            s = self.scale * t
            if not (self.lo <= s <= self.hi):
                continue
            cut = self.cut_at(s, x)
            if cut is None or cut.violation <= 0:
                continue
            key = round(s, 12)
            if key not in cuts or cuts[key].violation < cut.violation:
                cuts[key] = cut
        if not cuts:
            return SeparationResult(0.0)
        ranked = sorted(cuts.values(), key=lambda c: -c.violation)
        return SeparationResult(ranked[0].violation, ranked[0].witness, ranked[0], tuple(ranked))

    def seed_cuts(self) -> list:
        return [c for c in (self.cut_at(s) for s in self.seeds) if c is not None]


class QuadraticFamily(SemiInfiniteConstraint):
    """Degree-two family; the oracle is closed form (endpoints and vertex)."""

    def __init__(self, label: str, coefs, consts=None, rhs: float = 0.0,
                 lo: float = 0.0, hi: float = math.inf, seeds=()):
        super().__init__(label, coefs, consts, rhs, lo, hi, seeds)
        if self.degree > 2:
            raise ValueError(f"{label}: quadratic family with degree {self.degree}")

    def candidates(self, x) -> list:
        c = np.zeros(3)
        p = self.polynomial(x)
        c[:p.size] = p
        points = [self.lo]
        if math.isfinite(self.hi):
            points.append(self.hi)
        if c[2] > 0:
            vertex = -c[1] / (2.0 * c[2])
            if self.lo < vertex < self.hi:
                points.append(vertex)
        elif math.isinf(self.hi) and (c[2] < 0 or (c[2] == 0 and c[1] < 0)):
            start = max(self.lo, 1.0)
            points.extend(start * 2.0 ** k for k in range(0, 200))
        return points


class PolynomialFamily(SemiInfiniteConstraint):
    """General-degree family separated through exact stationary-point analysis."""


@dataclass(frozen=True)
class SIPResult:
    value: float
    point: np.ndarray
    iterations: int
    max_violation: float
    trust_radius: float
    cuts: tuple = field(default=(), repr=False)

    @property
    def dual(self) -> DualPoint:
        return DualPoint.from_array(self.point)

    @property
    def cut_counts(self) -> dict:
        counts = {}
        for cut in self.cuts:
            counts[cut.family] = counts.get(cut.family, 0) + 1
        return counts


def _solve_master(c: np.ndarray, rows: list, rhs: list, radius: float, lp_tol: float):
    """min c.x s.t. rows x >= rhs, |x| <= radius, through the dual LP."""
    k = c.size
    A = np.array(rows, dtype=float).reshape(len(rows), k)
    b = np.array(rhs, dtype=float)
    A_eq = np.hstack([A.T, np.eye(k), -np.eye(k)])
    cost = np.concatenate([-b, np.full(2 * k, radius)])
    result = solve_lp(LinearProgram(cost, A_eq=A_eq, b_eq=c), lp_tol)
    if not result.ok:
        raise SolverError(f"Cutting-plane master LP ended with status '{result.status}' "
                          f"({len(rows)} cuts, box radius {radius:g})")
    x = -result.duals_eq
    return x, float(c @ x)


def solve_sip(objective, constraints, feas_tol: float = 1e-8, gap_tol: float = 1e-9,
              trust_radius0: float = 1e3, trust_radius_cap: float = 1e9,
              max_iterations: int = 2000, lp_tol: float = 1e-9,
              linear_cuts=(), warm_cuts=()) -> SIPResult:
    """
    Minimises a linear objective subject to semi-infinite constraint families.

    :param objective: Objective vector c.
    :param constraints: Non-empty list of SemiInfiniteConstraint.
    :param feas_tol: Largest normalised violation accepted at termination.
    :param gap_tol: Master value change below which a binding box is accepted.
    :param trust_radius0: Initial box radius.
    :param trust_radius_cap: Largest box radius before the model is declared unbounded.
    :param max_iterations: Master solves allowed.
    :param lp_tol: Simplex tolerance.
    :param linear_cuts: Permanent Cut rows added to every master.
    :param warm_cuts: Cuts from earlier solves of constraint families that are unchanged.
    :return: SIPResult.
    :raises: SolverError on LP failure, box cap or iteration cap.
    """
    c = np.asarray(objective, dtype=float)
    if not constraints:
        raise ValueError("solve_sip needs at least one constraint family")
    for family in constraints:
        if family.dimension != c.size:
            raise ValueError(f"{family.label} has dimension {family.dimension}, objective has {c.size}")

    cuts = list(linear_cuts) + list(warm_cuts)
    for family in constraints:
        cuts.extend(family.seed_cuts())
    rows = [cut.row for cut in cuts]
    rhs = [cut.rhs for cut in cuts]

    radius = trust_radius0
    settled_value = None
    previous = -math.inf
    for iteration in range(1, max_iterations + 1):
        x, value = _solve_master(c, rows, rhs, radius, lp_tol)
        if value < previous - 1e3 * lp_tol * max(1.0, abs(previous)):
            logging.debug("Master value dropped from %.12g to %.12g", previous, value)
        previous = value

        new_cuts = []
        max_violation = 0.0
        for family in constraints:
            separation = family.separate(x)
            max_violation = max(max_violation, separation.violation)
            new_cuts.extend(cut for cut in separation.cuts if cut.violation > feas_tol)

        if new_cuts:
            cuts.extend(new_cuts)
            rows.extend(cut.row for cut in new_cuts)
            rhs.extend(cut.rhs for cut in new_cuts)
            logging.debug("SIP iteration %d: value %.12g, max violation %.3g, %d new cuts",
                          iteration, value, max_violation, len(new_cuts))
            continue

        on_box = float(np.max(np.abs(x))) >= radius * (1.0 - 1e-9)
        if on_box and (settled_value is None or abs(value - settled_value) > gap_tol * max(1.0, abs(value))):
            settled_value = value
            radius *= 10.0
            if radius > trust_radius_cap:
                logging.error("SIP master still binding at box radius %g", radius / 10.0)
                raise SolverError(f"Cutting-plane model appears unbounded: master binds at the "
                                  f"box cap {trust_radius_cap:g}")
            logging.debug("SIP master on the box boundary, radius raised to %g", radius)
            previous = -math.inf
            continue

        logging.debug("SIP converged after %d iterations: value %.12g", iteration, value)
        return SIPResult(value, x, iteration, max_violation, radius, tuple(cuts))

    logging.error("SIP hit the iteration cap of %d", max_iterations)
    raise SolverError(f"Cutting-plane solve did not converge within {max_iterations} iterations")
