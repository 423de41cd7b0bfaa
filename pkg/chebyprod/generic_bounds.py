"""
Worst-case probabilities of symmetric events {h(xi) <= 0} that depend on xi
only through s = sum(xi) and the interval [phi_lo(s), phi_hi(s)] that
||xi||^2 can reach inside the event. The min, max and sum events are
described by piecewise quadratics in s.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from chebyprod.config_loader import SolverSettings
from chebyprod.errors import InvalidSpecError
from chebyprod.events import Event
from chebyprod.moments import MomentSpec, require_slater
from chebyprod.product_bounds import BoundResult, bound_result, sum_seeds, dual_objective
from chebyprod.sip import Cut, QuadraticFamily, solve_sip

GENERIC_KINDS = ("sum", "min", "max")


@dataclass(frozen=True)
class Piece:
    """a s^2 + b s + c on the closed interval [lo, hi]; `sentinel` of +-inf marks a vacuous piece."""
    lo: float
    hi: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    sentinel: float = None

    @property
    def finite(self) -> bool:
        return self.sentinel is None

    def contains(self, s: float) -> bool:
        return self.lo <= s <= self.hi

    def __call__(self, s: float) -> float:
        if not self.finite:
            return self.sentinel
        return (self.a * s + self.b) * s + self.c


class PiecewiseQuadratic:
    def __init__(self, pieces):
        self.pieces = sorted(pieces, key=lambda p: p.lo)
        for left, right in zip(self.pieces, self.pieces[1:]):
            if right.lo > left.hi:
                raise ValueError(f"Gap between pieces at [{left.hi}, {right.lo}]")

    def __call__(self, s: float) -> float:
        # Finite pieces take precedence at shared endpoints
        matches = [p for p in self.pieces if p.contains(s)]
        if not matches:
            raise ValueError(f"s = {s} lies outside every piece")
        finite = [p for p in matches if p.finite]
        return (finite or matches)[0](s)

    @property
    def finite_pieces(self) -> list:
        return [p for p in self.pieces if p.finite]

    def __len__(self):
        return len(self.pieces)


def _quadratic_on(lo, hi, a, b=0.0, c=0.0) -> Piece:
    return Piece(float(lo), float(hi), float(a), float(b), float(c))


def _envelope(pieces, domain, sentinel) -> PiecewiseQuadratic:
    lo, hi = domain
    pieces = list(pieces)
    if lo > 0.0:
        pieces.append(Piece(0.0, lo, sentinel=sentinel))
    if math.isfinite(hi):
        pieces.append(Piece(hi, math.inf, sentinel=sentinel))
    return PiecewiseQuadratic(pieces)


def table_phi(event: Event, T: int, gamma: float = None) -> tuple:
    """
    Envelopes of ||xi||^2 over the event slice {xi >= 0, sum(xi) = s}.

    :param event: A sum, min or max event.
    :param T: Dimension, at least 2.
    :param gamma: Threshold; defaults to event.gamma.
    :return: (phi_lo, phi_hi, domain) where domain = (lo, hi) is the range of
             s that meets the event. Outside it phi_lo is +inf and phi_hi is -inf.
    :raises: InvalidSpecError for product events or T < 2.
    """
    if event.kind not in GENERIC_KINDS:
        raise InvalidSpecError(f"No piecewise envelope for {event.kind} events")
    if T < 2:
        raise InvalidSpecError(f"T must be at least 2, got {T}")
    g = event.gamma if gamma is None else gamma
    inf = math.inf
    uniform = 1.0 / T
    # gamma^2 + (s - gamma)^2 / (T-1): one coordinate pinned at gamma, the rest equal
    pinned = (1.0 / (T - 1), -2.0 * g / (T - 1), g * g * T / (T - 1))

    if event.name == "sum_leq":
        domain = (0.0, g)
        lower = [_quadratic_on(0.0, g, uniform)]
        upper = [_quadratic_on(0.0, g, 1.0)]
    elif event.name == "sum_geq":
        domain = (g, inf)
        lower = [_quadratic_on(g, inf, uniform)]
        upper = [_quadratic_on(g, inf, 1.0)]
    elif event.name == "min_leq":
        domain = (0.0, inf)
        lower = [_quadratic_on(0.0, g * T, uniform), _quadratic_on(g * T, inf, *pinned)]
        upper = [_quadratic_on(0.0, inf, 1.0)]
    elif event.name == "min_geq":
        domain = (g * T, inf)
        lower = [_quadratic_on(g * T, inf, uniform)]
        upper = [_quadratic_on(g * T, inf, 1.0, 2.0 * g - 2.0 * g * T, T * (T - 1) * g * g)]
    elif event.name == "max_leq":
        domain = (0.0, g * T)
        lower = [_quadratic_on(0.0, g * T, uniform)]
        upper = [_quadratic_on(k * g, (k + 1) * g, 1.0, -2.0 * k * g, k * g * g + (k * g) ** 2)
                 for k in range(T)]
    else:
        domain = (g, inf)
        lower = [_quadratic_on(g, g * T, *pinned), _quadratic_on(g * T, inf, uniform)]
        upper = [_quadratic_on(g, inf, 1.0)]
    return _envelope(lower, domain, inf), _envelope(upper, domain, -inf), domain


def _event_families(spec: MomentSpec, event: Event) -> tuple:
    T = spec.T
    lower, upper, domain = table_phi(event, T)
    families = [
        QuadraticFamily("B1", [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0 / T, 1.0]],
                        rhs=0.0, seeds=sum_seeds(spec, event.gamma)),
        QuadraticFamily("B2", [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]],
                        rhs=0.0, seeds=sum_seeds(spec, event.gamma)),
    ]
    for label, envelope in (("B3", lower), ("B4", upper)):
        for index, piece in enumerate(envelope.finite_pieces):
            seeds = [piece.lo, 2.0 * piece.lo + 1.0]
            if math.isfinite(piece.hi):
                seeds += [piece.hi, 0.5 * (piece.lo + piece.hi)]
            families.append(QuadraticFamily(
                f"{label}[{index}]",
                [[1.0, 0.0, piece.c, 0.0], [0.0, 1.0, piece.b, 0.0], [0.0, 0.0, piece.a, 1.0]],
                rhs=1.0, lo=piece.lo, hi=piece.hi, seeds=seeds))
    sign_rows = (
        Cut((0.0, 0.0, 1.0 / T, 1.0), 0.0, "B1_sign", 0.0),
        Cut((0.0, 0.0, 1.0, 1.0), 0.0, "B2_sign", 0.0),
    )
    return families, sign_rows, domain


def generic_bound(spec: MomentSpec, event: Event, settings: SolverSettings = None) -> BoundResult:
    """
    sup P(h(xi) in event) over the symmetric ambiguity set, for sum, min and max events.

    :raises: InvalidSpecError, InfeasibleSpecError, SolverError.
    """
    require_slater(spec)
    settings = settings or SolverSettings()
    families, sign_rows, domain = _event_families(spec, event)
    result = solve_sip(
        dual_objective(spec), families,
        feas_tol=settings.feas_tol, gap_tol=settings.gap_tol,
        trust_radius0=settings.trust_radius, trust_radius_cap=settings.trust_radius_cap,
        max_iterations=settings.max_iterations, lp_tol=settings.lp_tol,
        linear_cuts=sign_rows)
    logging.debug("%s at gamma=%.6g (s in [%g, %g]): %.10g", event.name, event.gamma,
                  domain[0], domain[1], result.value)
    return bound_result(result.value, dual=result.dual, iterations=result.iterations,
                        max_violation=result.max_violation, cut_counts=result.cut_counts)


def scan_piece_minimum(piece: Piece, dual, points: int = 100_000) -> float:
    """Grid minimum of alpha + beta s + gamma2 s^2 + gamma1 * piece(s) over a bounded piece."""
    if not (piece.finite and math.isfinite(piece.hi)):
        raise ValueError("Grid scans need a finite, bounded piece")
    x = dual.as_array() if hasattr(dual, "as_array") else np.asarray(dual, dtype=float)
    s = np.linspace(piece.lo, piece.hi, points)
    values = x[0] + x[1] * s + x[3] * s ** 2 + x[2] * ((piece.a * s + piece.b) * s + piece.c)
    return float(values.min())
