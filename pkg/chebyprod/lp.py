"""
Dense two-phase primal simplex for the small linear programs of the package:
the cutting-plane masters (a handful of rows) and the primal atom-grid LPs
(a few rows, up to ~10^4 columns).

Problems are stated as

    minimize c^T x  s.t.  A_eq x = b_eq,  A_ge x >= b_ge,  lower <= x <= upper

and converted to standard form internally. Optimal results carry the dual
multipliers of the equality and >= rows.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from chebyprod.errors import InvalidSpecError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
STALLED = "stalled"

DEFAULT_TOL = 1e-9
DEGENERACY_LIMIT = 50


@dataclass
class LinearProgram:
    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_ge: np.ndarray = None
    b_ge: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = self._rows(self.A_eq, self.b_eq, n, "equality")
        self.A_ge, self.b_ge = self._rows(self.A_ge, self.b_ge, n, "inequality")
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if self.lower.size != n or self.upper.size != n:
            raise InvalidSpecError(f"Bounds must have length {n}")
        if np.any(self.lower > self.upper):
            raise InvalidSpecError("A lower bound exceeds its upper bound")
        for name, arr in (("c", self.c), ("b_eq", self.b_eq), ("b_ge", self.b_ge)):
            if not np.all(np.isfinite(arr)):
                raise InvalidSpecError(f"{name} contains non-finite entries")

    @staticmethod
    def _rows(A, b, n, label):
        if A is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[1] != n:
            raise InvalidSpecError(f"Every {label} row needs {n} entries, got {A.shape[1]}")
        if A.shape[0] != b.size:
            raise InvalidSpecError(f"{A.shape[0]} {label} rows but {b.size} right-hand sides")
        return A, b

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray = None
    value: float = None
    duals_eq: np.ndarray = None
    duals_ge: np.ndarray = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


class _StandardForm:
    """x = shift + M @ z with z >= 0; bound rows appended to the >= block."""

    def __init__(self, prob: LinearProgram):
        n = prob.n
        columns = []
        shift = np.zeros(n)
        bound_rows, bound_rhs = [], []
        for j in range(n):
            lo, hi = prob.lower[j], prob.upper[j]
            unit = np.zeros(n)
            unit[j] = 1.0
            if np.isfinite(lo):
                shift[j] = lo
                columns.append(unit)
                if np.isfinite(hi):
                    bound_rows.append(-unit)
                    bound_rhs.append(-hi)
            elif np.isfinite(hi):
                shift[j] = hi
                columns.append(-unit)
            else:
                columns.append(unit)
                columns.append(-unit)
        self.M = np.column_stack(columns) if columns else np.zeros((n, 0))
        self.shift = shift
        A_ge = np.vstack([prob.A_ge] + ([np.array(bound_rows)] if bound_rows else []))
        b_ge = np.concatenate([prob.b_ge, np.array(bound_rhs)])
        self.n_eq = prob.A_eq.shape[0]
        self.n_ge_user = prob.A_ge.shape[0]
        n_ge = A_ge.shape[0]
        n_z = self.M.shape[1]

        rows = np.vstack([prob.A_eq @ self.M, A_ge @ self.M]) if self.n_eq + n_ge else np.zeros((0, n_z))
        surplus = np.vstack([np.zeros((self.n_eq, n_ge)), -np.eye(n_ge)])
        self.A = np.hstack([rows, surplus])
        self.b = np.concatenate([prob.b_eq - prob.A_eq @ shift, b_ge - A_ge @ shift])
        self.flip = np.where(self.b < 0, -1.0, 1.0)
        self.A *= self.flip[:, None]
        self.b *= self.flip
        self.cost = np.concatenate([self.M.T @ prob.c, np.zeros(n_ge)])
        self.offset = float(prob.c @ shift)
        self.n_z = n_z


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    pivot_row = tableau[row] / tableau[row, col]
    tableau -= np.outer(tableau[:, col], pivot_row)
    tableau[row] = pivot_row


def _run(tableau: np.ndarray, basis: list, allowed: np.ndarray, tol: float, max_iter: int):
    """Iterates on a tableau whose last row holds reduced costs; returns (status, iterations)."""
    m = tableau.shape[0] - 1
    degenerate = 0
    bland = False
    for it in range(max_iter):
        reduced = tableau[-1, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -tol))
        if candidates.size == 0:
            return OPTIMAL, it
        col = int(candidates[0]) if bland else int(candidates[np.argmin(reduced[candidates])])
        column = tableau[:m, col]
        positive = column > tol
        if not positive.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        if bland:
            row = int(min(ties, key=lambda i: basis[i]))
        else:
            row = int(ties[np.argmax(column[ties])])
        if best <= tol:
            degenerate += 1
            if degenerate > DEGENERACY_LIMIT and not bland:
                logging.debug("Simplex degenerate for %d pivots, switching to Bland's rule", degenerate)
                bland = True
        else:
            degenerate = 0
        _pivot(tableau, row, col)
        basis[row] = col
    return STALLED, max_iter


def solve_lp(prob: LinearProgram, tol: float = DEFAULT_TOL) -> LPResult:
    """
    Solves a linear program with the two-phase dense simplex.

    :param prob: The LinearProgram.
    :param tol: Feasibility and optimality tolerance.
    :return: LPResult with status optimal, infeasible, unbounded or stalled.
    """
    sf = _StandardForm(prob)
    m, n_std = sf.A.shape
    max_iter = 50 * (m + prob.n + 1)
    if m == 0:
        if np.any(sf.cost < -tol):
            return LPResult(UNBOUNDED)
        x = sf.shift.copy()
        return LPResult(OPTIMAL, x, float(prob.c @ x), np.zeros(0), np.zeros(0), 0)

    # Phase 1: artificial identity basis.
    tableau = np.zeros((m + 1, n_std + m + 1))
    tableau[:m, :n_std] = sf.A
    tableau[:m, n_std:n_std + m] = np.eye(m)
    tableau[:m, -1] = sf.b
    tableau[-1, :n_std] = -sf.A.sum(axis=0)
    tableau[-1, -1] = -sf.b.sum()
    basis = list(range(n_std, n_std + m))
    allowed = np.ones(n_std + m, dtype=bool)
    status, it1 = _run(tableau, basis, allowed, tol, max_iter)
    if status == STALLED:
        logging.warning("Simplex phase 1 hit the iteration cap (%d)", max_iter)
        return LPResult(STALLED, iterations=it1)
    scale = max(1.0, float(np.max(np.abs(sf.b))))
    if -tableau[-1, -1] > tol * scale:
        logging.debug("LP infeasible, phase 1 residual %.3g", -tableau[-1, -1])
        return LPResult(INFEASIBLE, iterations=it1)

    # Drive artificials out of the basis; rows where that fails are redundant.
    keep = []
    for i in range(m):
        if basis[i] >= n_std:
            entries = np.abs(tableau[i, :n_std])
            j = int(np.argmax(entries))
            if entries[j] > tol:
                _pivot(tableau, i, j)
                basis[i] = j
                keep.append(i)
        else:
            keep.append(i)
    rows = keep + [m]
    tableau = np.delete(tableau[rows], np.s_[n_std:n_std + m], axis=1)
    basis = [basis[i] for i in keep]

    # Phase 2.
    cost = sf.cost
    tableau[-1, :-1] = cost - cost[basis] @ tableau[:-1, :-1]
    tableau[-1, -1] = -cost[basis] @ tableau[:-1, -1]
    status, it2 = _run(tableau, basis, np.ones(n_std, dtype=bool), tol, max_iter - it1)
    iterations = it1 + it2
    if status != OPTIMAL:
        if status == STALLED:
            logging.warning("Simplex phase 2 hit the iteration cap (%d)", max_iter)
        return LPResult(status, iterations=iterations)

    z = np.zeros(n_std)
    z[basis] = tableau[:-1, -1]
    x = sf.shift + sf.M @ z[:sf.n_z]
    value = float(prob.c @ x)

    y = np.zeros(m)
    B = sf.A[np.array(keep)][:, basis]
    try:
        y[np.array(keep)] = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:
        y[np.array(keep)] = np.linalg.lstsq(B.T, cost[basis], rcond=None)[0]
    y *= sf.flip
    duals_eq = y[:sf.n_eq]
    duals_ge = y[sf.n_eq:sf.n_eq + sf.n_ge_user]
    logging.debug("LP solved: %d rows, %d columns, value %.12g, %d pivots", m, n_std, value, iterations)
    return LPResult(OPTIMAL, x, value, duals_eq, duals_ge, iterations)
