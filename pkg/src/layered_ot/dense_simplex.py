"""Two-phase dense revised simplex for equality-form LPs (min c.x, Ax=b, x>=0).

Used for the flattened multi-marginal coupling LP, whose constraint matrix has
no network structure.  The basis inverse is refactorized every iteration (the
row count is the sum of support sizes, so this is cheap), pricing is Dantzig
with a Bland fallback after a degenerate stall, and ties in the ratio test are
broken lexicographically on the rows of the basis inverse.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import SolverError

ENTER_TOL_FACTOR = 1e-11
PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class DenseLPResult:
    x: np.ndarray
    basis: np.ndarray
    duals: np.ndarray
    objective: float
    iterations: int


def _lex_leaving(x_b, d, binv, rows):
    """Lexicographic ratio test among candidate rows (d[rows] > 0)."""
    ratios = np.maximum(x_b[rows], 0.0) / d[rows]
    best = ratios.min()
    tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
    if len(tied) == 1:
        return int(tied[0])
    # compare successive columns of B^-1 scaled by the pivot element
    table = binv[tied] / d[tied, None]
    order = np.lexsort(table.T[::-1])
    return int(tied[order[0]])


def _run_phase(A, b, c, basis, allowed, pivot_cap, stall_limit):
    r, n = A.shape
    cols = np.arange(n)
    iterations = 0
    stall = 0
    cost_scale = 1.0 + float(np.max(np.abs(c))) if n else 1.0
    enter_tol = ENTER_TOL_FACTOR * cost_scale
    while True:
        B = A[:, basis]
        try:
            binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise SolverError("singular basis matrix", basis=list(map(int, basis)))
        x_b = binv @ b
        y = c[basis] @ binv
        rc = c - y @ A
        rc[basis] = 0.0
        rc[~allowed] = 0.0
        worst = float(rc.min())
        if worst >= -enter_tol:
            return basis, binv, x_b, y, iterations
        if iterations >= pivot_cap:
            raise SolverError("pivot budget exhausted before optimality",
                              iterations=iterations, most_negative_rc=worst)
        if stall > stall_limit:
            e = int(cols[rc < -enter_tol][0])      # Bland fallback
        else:
            e = int(np.argmin(rc))
        d = binv @ A[:, e]
        rows = np.flatnonzero(d > PIVOT_TOL)
        if rows.size == 0:
            raise SolverError("unbounded direction in a coupling polytope", column=e)
        leave_row = _lex_leaving(x_b, d, binv, rows)
        stall = stall + 1 if x_b[leave_row] <= PIVOT_TOL else 0
        basis = basis.copy()
        basis[leave_row] = e
        iterations += 1


def simplex_equality(A, b, c, pivot_cap=None, stall_limit=None):
    """Solve the equality-form LP; A must have full row rank and b >= 0."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    r, n = A.shape
    if np.any(b < -FEAS_TOL):
        raise SolverError("negative right-hand side", worst=float(b.min()))
    b = np.maximum(b, 0.0)
    if pivot_cap is None:
        pivot_cap = 200 * (r + 1) + 20_000
    if stall_limit is None:
        stall_limit = 10 * (r + 1) + 50

    # phase 1: artificial identity basis
    A1 = np.hstack([A, np.eye(r)])
    c1 = np.concatenate([np.zeros(n), np.ones(r)])
    basis = np.arange(n, n + r)
    allowed = np.ones(n + r, dtype=bool)
    basis, binv, x_b, _, it1 = _run_phase(A1, b, c1, basis, allowed, pivot_cap, stall_limit)
    if float(x_b[np.flatnonzero(basis >= n)].sum() if np.any(basis >= n) else 0.0) > FEAS_TOL:
        raise SolverError("infeasible margins", artificial_mass=float(x_b.max()))

    # drive leftover zero-level artificials out of the basis
    for row in np.flatnonzero(basis >= n):
        pivot_row = binv[row] @ A
        candidates = np.flatnonzero(np.abs(pivot_row) > PIVOT_TOL)
        candidates = candidates[~np.isin(candidates, basis)]
        if candidates.size == 0:
            raise SolverError("redundant constraint row survived preprocessing", row=int(row))
        basis = basis.copy()
        basis[row] = int(candidates[0])
        binv = np.linalg.inv(A1[:, basis])

    # phase 2 on the real columns
    allowed = np.zeros(n + r, dtype=bool)
    allowed[:n] = True
    c2 = np.concatenate([c, np.zeros(r)])
    basis, binv, x_b, y, it2 = _run_phase(A1, b, c2, basis, allowed, pivot_cap, stall_limit)
    if np.any(basis >= n):
        raise SolverError("artificial column survived phase 2")

    x = np.zeros(n)
    x[basis] = np.maximum(x_b, 0.0)
    return DenseLPResult(x=x, basis=basis, duals=y, objective=float(c @ x),
                         iterations=it1 + it2)
