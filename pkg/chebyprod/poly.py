"""
Univariate polynomial helpers working on ascending coefficient vectors
(index i holds the coefficient of x**i), the layout used by
numpy.polynomial.polynomial.

Real roots are isolated with Sturm sequences and bisection, then polished by
Newton steps. Minimisation over an interval or a ray evaluates the
polynomial at the endpoints and at every real root of the derivative.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as P

DEFAULT_TOL = 1e-12
MAX_BISECTIONS = 400


@dataclass(frozen=True)
class RealRoot:
    value: float
    multiplicity: int


@dataclass(frozen=True)
class MinResult:
    """Global minimum of a polynomial over a domain; `unbounded` flags a ray where it tends to -inf."""
    argmin: float
    value: float
    unbounded: bool = False


def trim(coeffs) -> np.ndarray:
    """Drops trailing zero coefficients; the zero polynomial becomes [0.0]."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    nonzero = np.flatnonzero(c)
    if nonzero.size == 0:
        return np.zeros(1)
    return c[:nonzero[-1] + 1].copy()


def degree(coeffs) -> int:
    return trim(coeffs).size - 1


def evaluate(coeffs, x):
    return P.polyval(x, np.asarray(coeffs, dtype=float))


def _scaled_value(c: np.ndarray, x: float) -> float:
    # Same sign as p(x) for x >= 0, without overflow for large x.
    if x <= 1.0:
        return float(P.polyval(x, c))
    return float(P.polyval(1.0 / x, c[::-1]))


def _sign(value: float) -> int:
    value = float(value)
    return int(value > 0) - int(value < 0)


def sturm_sequence(coeffs) -> list:
    """
    Builds the Sturm sequence p0 = p, p1 = p', p_{k+1} = -rem(p_{k-1}, p_k).

    Every member is normalised to unit max-magnitude coefficient, and
    remainder coefficients below 1e-12 are treated as zero so that clusters
    of nearly multiple roots terminate the sequence at their common factor.
    """
    p = trim(coeffs)
    p = p / np.max(np.abs(p))
    sequence = [p]
    if p.size == 1:
        return sequence
    d = P.polyder(p)
    sequence.append(d / np.max(np.abs(d)))
    while sequence[-1].size > 1:
        _, rem = P.polydiv(sequence[-2], sequence[-1])
        rem = np.where(np.abs(rem) <= 1e-12, 0.0, rem)
        rem = trim(rem)
        if rem.size == 1 and rem[0] == 0.0:
            break
        sequence.append(-rem / np.max(np.abs(rem)))
    return sequence


def sign_variations(sequence: list, x: float) -> int:
    """Number of sign changes of the Sturm sequence at x >= 0 (x may be math.inf)."""
    if math.isinf(x):
        signs = [_sign(s[-1]) for s in sequence]
    else:
        signs = [_sign(_scaled_value(s, x)) for s in sequence]
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def cauchy_bound(coeffs) -> float:
    """Every root z satisfies |z| < 1 + max_i |c_i / c_n|."""
    c = trim(coeffs)
    if c.size == 1:
        return 1.0
    return 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))


def _split(lo: float, hi: float) -> float:
    if lo == 0.0 and hi > 2.0:
        return math.sqrt(hi)
    if lo > 0.0 and hi / lo > 4.0:
        return math.sqrt(lo * hi)
    return 0.5 * (lo + hi)


def _narrow(lo: float, hi: float, tol: float) -> bool:
    return hi - lo <= tol * max(1.0, abs(hi))


def _newton_polish(c: np.ndarray, x: float, lo: float, hi: float, steps: int = 8) -> float:
    d = P.polyder(c)
    for _ in range(steps):
        fx = P.polyval(x, c)
        dfx = P.polyval(x, d)
        if not np.isfinite(fx) or not np.isfinite(dfx) or dfx == 0.0:
            break
        step = fx / dfx
        candidate = x - step
        if not lo <= candidate <= hi:
            break
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            x = candidate
            break
        x = candidate
    return float(x)


def _bisect_sign_change(c: np.ndarray, lo: float, hi: float, tol: float) -> float:
    s_lo = _sign(_scaled_value(c, lo))
    for _ in range(MAX_BISECTIONS):
        if _narrow(lo, hi, tol):
            break
        mid = _split(lo, hi)
        s_mid = _sign(_scaled_value(c, mid))
        if s_mid == 0:
            return mid
        if s_mid == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisect_by_count(sequence: list, lo: float, hi: float, tol: float) -> float:
    v_lo = sign_variations(sequence, lo)
    v_hi = sign_variations(sequence, hi)
    for _ in range(MAX_BISECTIONS):
        if _narrow(lo, hi, tol):
            break
        mid = _split(lo, hi)
        v_mid = sign_variations(sequence, mid)
        if v_lo - v_mid > 0:
            hi, v_hi = mid, v_mid
        elif v_mid - v_hi > 0:
            lo, v_lo = mid, v_mid
        else:
            break
    return 0.5 * (lo + hi)


def _sturm_roots(c: np.ndarray, lo: float, hi: float, tol: float):
    """
    Distinct real roots of c in (lo, hi], each paired with the number of
    Sturm-distinct roots merged into it. Returns None when the sequence is
    numerically inconsistent.
    """
    sequence = sturm_sequence(c)
    if len(sequence) == 1:
        return []
    v_lo = sign_variations(sequence, lo)
    v_hi = sign_variations(sequence, hi)
    total = v_lo - v_hi
    if total < 0 or total > c.size - 1:
        return None
    found = []
    stack = [(lo, hi, v_lo, v_hi)]
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count < 0:
            return None
        if count == 0:
            continue
        if count == 1 or _narrow(a, b, tol):
            found.append((a, b, count))
            continue
        mid = _split(a, b)
        vm = sign_variations(sequence, mid)
        stack.append((a, mid, va, vm))
        stack.append((mid, b, vm, vb))
    roots = []
    for a, b, count in found:
        if count == 1 and _sign(_scaled_value(c, a)) * _sign(_scaled_value(c, b)) < 0:
            x = _bisect_sign_change(c, a, b, tol)
        elif count == 1:
            x = _bisect_by_count(sequence, a, b, tol)
        else:
            x = 0.5 * (a + b)
        roots.append((_newton_polish(c, x, a, b), count))
    return sorted(roots)


def _eigen_roots(c: np.ndarray, lo: float, hi: float) -> list:
    if c.size < 2:
        return []
    z = P.polyroots(c / np.max(np.abs(c)))
    keep = []
    for root in np.atleast_1d(z):
        if abs(root.imag) <= 1e-7 * max(1.0, abs(root.real)) and lo <= root.real <= hi:
            keep.append(_newton_polish(c, float(root.real), lo, hi))
    return sorted(keep)


def _multiplicity(c: np.ndarray, x: float, merged: int, tol: float) -> int:
    delta = max(1e3 * tol, 1e-7) * max(1.0, abs(x))
    left = _sign(_scaled_value(c, max(x - delta, 0.0)))
    right = _sign(_scaled_value(c, x + delta))
    odd = left != right or left == 0
    if merged <= 1:
        return 1 if odd else 2
    return merged if (merged % 2 == 1) == odd else merged + 1


def isolate_nonnegative_roots(coeffs, tol: float = DEFAULT_TOL) -> list:
    """
    Finds the real roots of a polynomial in [0, inf).

    :param coeffs: Ascending coefficients.
    :param tol: Target width of each isolating interval (relative above 1).
    :return: Sorted list of RealRoot, each distinct root reported once.
    :raises: ValueError for the zero polynomial or a non-positive tol.
    """
    c = trim(coeffs)
    if c.size == 1 and c[0] == 0.0:
        raise ValueError("The zero polynomial has no isolated roots")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    roots = []
    leading_zeros = int(np.flatnonzero(c)[0])
    if leading_zeros:
        roots.append(RealRoot(0.0, leading_zeros))
        c = c[leading_zeros:]
    if c.size == 1:
        return roots
    upper = cauchy_bound(c)
    isolated = _sturm_roots(c, 0.0, upper, tol)
    if isolated is None:
        logging.debug("Sturm sequence inconsistent for degree %d, using companion eigenvalues", c.size - 1)
        isolated = [(x, 1) for x in _eigen_roots(c, 0.0, upper)]
    for x, merged in isolated:
        if x <= 0.0:
            continue
        if roots and abs(x - roots[-1].value) <= 10 * tol * max(1.0, abs(x)):
            continue
        roots.append(RealRoot(x, _multiplicity(c, x, merged, tol)))
    return roots


def critical_points(coeffs, lo: float = 0.0, hi: float = math.inf, tol: float = DEFAULT_TOL) -> list:
    """Real roots of p' in [lo, hi]; duplicates from the two root finders are harmless."""
    c = trim(coeffs)
    d = trim(P.polyder(c))
    if d.size == 1:
        return []
    upper = hi if math.isfinite(hi) else lo + cauchy_bound(d) + 1.0
    points = list(_eigen_roots(d, lo, upper))
    isolated = _sturm_roots(d, lo, upper, tol)
    if isolated:
        points.extend(x for x, _ in isolated)
    return [x for x in points if lo <= x <= upper]


def global_min(coeffs, lo: float = 0.0, hi: float = math.inf, tol: float = DEFAULT_TOL) -> MinResult:
    """
    Global minimum of a polynomial over [lo, hi] or the ray [lo, inf).

    On a ray where the polynomial is unbounded below the result carries
    `unbounded=True` and a witness point with a negative value.

    :param coeffs: Ascending coefficients.
    :param lo: Left end of the domain.
    :param hi: Right end, math.inf for a ray.
    :param tol: Root isolation tolerance.
    :return: MinResult(argmin, value, unbounded).
    :raises: ValueError if lo > hi.
    """
    if lo > hi:
        raise ValueError(f"Empty domain [{lo}, {hi}]")
    c = trim(coeffs)
    if c.size == 1:
        return MinResult(lo, float(c[0]))
    if math.isinf(hi) and c[-1] < 0:
        x = max(lo, 1.0)
        for _ in range(2000):
            if evaluate(c, x) < 0:
                break
            x *= 2.0
        return MinResult(x, float(evaluate(c, x)), True)
    scale = float(np.max(np.abs(c)))
    candidates = [lo]
    if math.isfinite(hi):
        candidates.append(hi)
    candidates.extend(critical_points(c / scale, lo, hi, tol))
    values = [float(evaluate(c, x)) for x in candidates]
    best = int(np.argmin(values))
    return MinResult(candidates[best], values[best])
