"""
Symmetric subproblems over the simplex slice sum(xi) = 1, xi >= 0:

* f_T(gamma_bar): min ||xi||^2 subject to prod(xi) <= gamma_bar
* g_T(gamma_under): max ||xi||^2 subject to prod(xi) >= gamma_under
* f_T_k / g_T_k: the same restricted to two-level points with k coordinates
  at one value and T-k at another
* min_product_given_means: min prod(xi) given the coordinate mean and mean square

Where the product constraint binds, the level value y of the T-k group solves
((1-(T-k)y)/k)^k y^(T-k) = gamma on [0, 1/(T-k)], and the objective is
evaluated at every real root.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as P

from chebyprod import poly
from chebyprod.errors import InvalidSpecError

RATIO_RTOL = 1e-12


@dataclass(frozen=True)
class TwoLevelPoint:
    """k coordinates at xi_lo and T-k at xi_hi."""
    xi_lo: float
    xi_hi: float
    k: int

    def coordinates(self, T: int) -> tuple:
        return (self.xi_lo,) * self.k + (self.xi_hi,) * (T - self.k)

    def objective(self, T: int) -> float:
        return self.k * self.xi_lo ** 2 + (T - self.k) * self.xi_hi ** 2


@dataclass(frozen=True)
class MinProductResult:
    feasible: bool
    value: float = None
    witness: tuple = None


def _check_T(T: int) -> None:
    if T < 2:
        raise InvalidSpecError(f"T must be at least 2, got {T}")


def uniform_product(T: int) -> float:
    """T^-T, the product of the barycentre of the simplex."""
    return math.exp(-T * math.log(T))


def two_level_points(T: int, k: int, gamma: float) -> list:
    """
    Two-level points on the simplex slice whose product equals gamma.

    :param T: Dimension.
    :param k: Size of the group at xi_lo, 1 <= k <= T-1.
    :param gamma: Target product, gamma > 0.
    :return: List of TwoLevelPoint, one per real root of the binding equation.
    """
    _check_T(T)
    if not 1 <= k <= T - 1:
        raise InvalidSpecError(f"k must lie in [1, {T - 1}], got {k}")
    # ((1-(T-k)y)/k)^k * y^(T-k) - gamma as a polynomial in y.
    linear = np.array([1.0 / k, -(T - k) / k])
    coeffs = P.polymul(P.polypow(linear, k), np.eye(T - k + 1)[T - k])
    coeffs = coeffs.copy()
    coeffs[0] -= gamma
    upper = 1.0 / (T - k)
    points = []
    for root in poly.isolate_nonnegative_roots(coeffs):
        if root.value > upper * (1.0 + 1e-12):
            continue
        y = min(root.value, upper)
        lo = (1.0 - (T - k) * y) / k
        points.append(TwoLevelPoint(max(lo, 0.0), y, k))
    return points


def f_T(T: int, gamma_bar: float) -> float:
    """
    min ||xi||^2 over the simplex slice with prod(xi) <= gamma_bar.

    :raises: InvalidSpecError for T < 2 or gamma_bar < 0.
    """
    _check_T(T)
    if gamma_bar < 0:
        raise InvalidSpecError(f"gamma_bar must be non-negative, got {gamma_bar}")
    if gamma_bar == 0:
        return 1.0 / (T - 1)
    if gamma_bar >= uniform_product(T):
        return 1.0 / T
    return min(p.objective(T) for p in two_level_points(T, 1, gamma_bar))


def g_T(T: int, gamma_under: float) -> float:
    """
    max ||xi||^2 over the simplex slice with prod(xi) >= gamma_under;
    -inf when the constraint set is empty.

    :raises: InvalidSpecError for T < 2 or gamma_under < 0.
    """
    _check_T(T)
    if gamma_under < 0:
        raise InvalidSpecError(f"gamma_under must be non-negative, got {gamma_under}")
    if gamma_under == 0:
        return 1.0
    barycentre = uniform_product(T)
    if abs(gamma_under - barycentre) <= RATIO_RTOL * barycentre:
        return 1.0 / T
    if gamma_under > barycentre:
        return -math.inf
    return max(p.objective(T) for p in two_level_points(T, 1, gamma_under))


def _check_window(T: int, k: int, gamma: float) -> None:
    _check_T(T)
    if not 0 < gamma < uniform_product(T):
        raise InvalidSpecError(f"gamma must lie in (0, T^-T) = (0, {uniform_product(T):.6g}), got {gamma}")


def f_T_k(T: int, k: int, gamma: float) -> float:
    _check_window(T, k, gamma)
    points = two_level_points(T, k, gamma)
    if not points:
        return math.inf
    return min(p.objective(T) for p in points)


def g_T_k(T: int, k: int, gamma: float) -> float:
    _check_window(T, k, gamma)
    points = two_level_points(T, k, gamma)
    if not points:
        return -math.inf
    return max(p.objective(T) for p in points)


def min_product_given_means(T: int, m1: float, m2: float) -> MinProductResult:
    """
    Minimises prod(xi) over xi >= 0 with mean(xi) = m1 and mean(xi^2) = m2.

    The problem is feasible iff 1 <= m2/m1^2 <= T. The minimum is zero iff
    m2/m1^2 >= T/(T-1), with a witness that has one zero coordinate.
    Otherwise the minimiser is a two-level point.

    :return: MinProductResult(feasible, value, witness).
    :raises: InvalidSpecError for T < 2 or non-positive m1, m2.
    """
    _check_T(T)
    if m1 <= 0 or m2 <= 0:
        raise InvalidSpecError(f"m1 and m2 must be positive, got {m1}, {m2}")
    ratio = m2 / m1 ** 2
    if ratio < 1.0 - RATIO_RTOL or ratio > T * (1.0 + RATIO_RTOL):
        logging.debug("No point with mean %s and mean square %s in dimension %d", m1, m2, T)
        return MinProductResult(False)
    ratio = min(max(ratio, 1.0), float(T))

    if ratio >= (T / (T - 1.0)) * (1.0 - RATIO_RTOL):
        if T == 2:
            return MinProductResult(True, 0.0, (0.0, 2.0 * m1))
        M = T * m1 / (T - 1.0)
        Q = T * m2 / (T - 1.0)
        spread = max(Q - M ** 2, 0.0)
        x = M + math.sqrt((T - 2) * spread)
        y = max(M - math.sqrt(spread / (T - 2)), 0.0)
        return MinProductResult(True, 0.0, (0.0, x) + (y,) * (T - 2))

    r = ratio / T
    s = T * m1
    best = None
    for k in range(1, T):
        disc = max((T - k) * k * (T * r - 1.0), 0.0)
        for sign in (1.0, -1.0):
            b = ((T - k) + sign * math.sqrt(disc)) / (T * (T - k))
            a = (1.0 - (T - k) * b) / k
            if a < -1e-15 or b < -1e-15:
                continue
            a, b = max(a, 0.0), max(b, 0.0)
            log_value = T * math.log(s) + (k * math.log(a) if a > 0 else -math.inf) \
                + ((T - k) * math.log(b) if b > 0 else -math.inf)
            value = math.exp(log_value) if math.isfinite(log_value) else 0.0
            if best is None or value < best.value:
                best = MinProductResult(True, value, (a * s,) * k + (b * s,) * (T - k))
    return best
