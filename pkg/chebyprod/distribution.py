"""
Finitely supported permutation-symmetric distributions on the non-negative
orthant, described by atom families: Uniform(z) puts every coordinate at z,
OneDistinct(x, y) puts one coordinate at x and the other T-1 at y and spreads
its mass evenly over the T placements.
"""
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from chebyprod.errors import InvalidSpecError

# Coordinates in [-CLAMP_TOL, 0) produced by rounding are reported as 0.
CLAMP_TOL = 1e-12


def clamp(value: float) -> float:
    if -CLAMP_TOL <= value < 0.0:
        return 0.0
    return float(value)


@dataclass(frozen=True)
class Uniform:
    z: float
    prob: float

    kind = "uniform"

    def representative(self, T: int) -> tuple:
        return (self.z,) * T

    def moments(self, T: int) -> tuple:
        """(m1, m2, cross) of the atom: coordinate mean, mean square and mean pairwise product."""
        return self.z, self.z ** 2, self.z ** 2


@dataclass(frozen=True)
class OneDistinct:
    x: float
    y: float
    prob: float

    kind = "one_distinct"

    def representative(self, T: int) -> tuple:
        return (self.x,) + (self.y,) * (T - 1)

    def moments(self, T: int) -> tuple:
        m1 = (self.x + (T - 1) * self.y) / T
        m2 = (self.x ** 2 + (T - 1) * self.y ** 2) / T
        return m1, m2, (T * m1 ** 2 - m2) / (T - 1)


class DiscreteSymmetricDistribution:
    """A finite mixture of Uniform and OneDistinct families in dimension T."""

    def __init__(self, T: int, families):
        if T < 1:
            raise InvalidSpecError(f"T must be positive, got {T}")
        self.T = T
        self.families = tuple(f for f in families if f.prob != 0.0)

    def __repr__(self):
        return f"DiscreteSymmetricDistribution(T={self.T}, families={list(self.families)})"

    @property
    def total_mass(self) -> float:
        return math.fsum(f.prob for f in self.families)

    def _moment(self, index: int) -> float:
        return math.fsum(f.prob * f.moments(self.T)[index] for f in self.families)

    def mean(self) -> float:
        return self._moment(0)

    def second_moment(self) -> float:
        return self._moment(1)

    def cross_moment(self) -> float:
        return self._moment(2) if self.T > 1 else self._moment(1)

    def residuals(self, spec) -> dict:
        """Signed errors of the four moment conditions against a MomentSpec."""
        return {
            "mass": self.total_mass - 1.0,
            "mean": self.mean() - spec.mu,
            "second": self.second_moment() - spec.second_moment,
            "cross": self.cross_moment() - spec.cross_moment,
        }

    def max_residual(self, spec) -> float:
        return max(abs(v) for v in self.residuals(spec).values())

    def covariance_deficit(self, spec) -> tuple:
        """
        Eigenvalues of Sigma + mu mu^T - E[xi xi^T], which has the structure
        d_I * I + d_J * 11^T.

        :return: (d_I, d_I + T*d_J) with multiplicities T-1 and 1.
        """
        d_i = (1.0 - spec.rho) * spec.sigma ** 2 - (self.second_moment() - self.cross_moment())
        d_j = spec.cross_moment - self.cross_moment()
        return d_i, d_i + self.T * d_j

    def event_probability(self, event) -> float:
        return math.fsum(f.prob for f in self.families if event.holds(f.representative(self.T)))

    def check(self, tol: float = 1e-12) -> None:
        """
        :raises: InvalidSpecError on negative mass, negative coordinates or a
                 total mass away from 1.
        """
        for f in self.families:
            if f.prob < -tol:
                raise InvalidSpecError(f"Negative probability in {f}")
            if min(f.representative(self.T)) < 0:
                raise InvalidSpecError(f"Negative coordinate in {f}")
        if abs(self.total_mass - 1.0) > max(tol, 1e-10):
            raise InvalidSpecError(f"Probabilities sum to {self.total_mass}, not 1")

    def expanded_atoms(self) -> list:
        """Every distinct point with its probability, OneDistinct families split over the T placements."""
        atoms = {}
        for f in self.families:
            if isinstance(f, Uniform):
                points = [f.representative(self.T)]
            else:
                points = [tuple(f.x if i == j else f.y for i in range(self.T)) for j in range(self.T)]
            for point in points:
                atoms[point] = atoms.get(point, 0.0) + f.prob / len(points)
        return sorted(atoms.items())

    def brute_force_moments(self) -> tuple:
        """(mean, second, cross) averaged over all T! coordinate permutations of every atom."""
        permutations = list(itertools.permutations(range(self.T)))
        first = second = cross = 0.0
        for point, prob in self.expanded_atoms():
            for perm in permutations:
                v = np.array([point[i] for i in perm])
                first += prob * v.mean() / len(permutations)
                second += prob * float(np.mean(v ** 2)) / len(permutations)
                if self.T > 1:
                    outer = np.outer(v, v)
                    off = (outer.sum() - np.trace(outer)) / (self.T * (self.T - 1))
                    cross += prob * off / len(permutations)
        return first, second, cross

    def to_dict(self) -> list:
        return [{"type": f.kind, "coords": list(f.representative(self.T)), "prob": f.prob}
                for f in self.families]

    def to_json(self) -> str:
        return json.dumps(self.to_dict())
