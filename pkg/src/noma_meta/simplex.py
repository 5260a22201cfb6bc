"""Small dense two-phase simplex solver with Bland's rule.

Solves    max c.x   s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.

Problem sizes here are tiny (a handful of power fractions and per-rank
constraints), so a dense tableau with anti-cycling pivoting is simpler and
more predictable than calling out to a general LP library; scipy's solver
is used as an independent oracle in the tests only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPResult", "solve_lp"]

_EPS = 1e-11


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int):
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and tableau[r, col] != 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _iterate(tableau: np.ndarray, basis: np.ndarray, allowed_cols: int) -> str:
    """Simplex iterations; the last tableau row carries the reduced costs of
    a maximization and the last column the RHS.  Bland's rule: the lowest
    eligible entering column, and the lowest basic index among ratio ties,
    which guarantees termination without cycling."""
    while True:
        entering = -1
        for j in range(allowed_cols):
            if tableau[-1, j] > _EPS:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = tableau[:-1, entering]
        rhs = tableau[:-1, -1]
        ratios = np.full(col.size, np.inf)
        positive = col > _EPS
        ratios[positive] = rhs[positive] / col[positive]
        best = np.min(ratios)
        if not np.isfinite(best):
            return "unbounded"
        candidates = np.flatnonzero(ratios <= best + _EPS)
        leaving = candidates[np.argmin(basis[candidates])]
        _pivot(tableau, basis, leaving, entering)


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None) -> LPResult:
    """Maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0."""
    c = np.asarray(c, dtype=float)
    n = c.size
    a_ub = np.zeros((0, n)) if a_ub is None else np.atleast_2d(np.asarray(a_ub, float))
    b_ub = np.zeros(0) if b_ub is None else np.atleast_1d(np.asarray(b_ub, float))
    a_eq = np.zeros((0, n)) if a_eq is None else np.atleast_2d(np.asarray(a_eq, float))
    b_eq = np.zeros(0) if b_eq is None else np.atleast_1d(np.asarray(b_eq, float))
    m_ub, m_eq = len(b_ub), len(b_eq)
    m = m_ub + m_eq
    if m == 0:
        # x = 0 is optimal unless some objective coefficient is positive
        if np.any(c > _EPS):
            return LPResult("unbounded", None, None)
        return LPResult("optimal", np.zeros(n), 0.0)

    slack = np.vstack([np.eye(m_ub), np.zeros((m_eq, m_ub))])
    body = np.hstack([np.vstack([a_ub, a_eq]), slack])
    rhs = np.concatenate([b_ub, b_eq]).copy()
    negative = rhs < 0.0
    body[negative] *= -1.0
    rhs[negative] *= -1.0
    n_struct = n + m_ub

    # phase 1: artificial basis, maximize -(sum of artificials)
    tableau = np.zeros((m + 1, n_struct + m + 1))
    tableau[:m, :n_struct] = body
    tableau[:m, n_struct:n_struct + m] = np.eye(m)
    tableau[:m, -1] = rhs
    basis = np.arange(n_struct, n_struct + m)
    tableau[-1, n_struct:n_struct + m] = -1.0
    for r in range(m):
        tableau[-1] += tableau[r]  # zero the reduced costs of the basis
    if _iterate(tableau, basis, n_struct + m) != "optimal":
        return LPResult("infeasible", None, None)  # phase 1 cannot be unbounded
    residual = sum(tableau[r, -1] for r in range(m) if basis[r] >= n_struct)
    if residual > 1e-8:
        return LPResult("infeasible", None, None)
    # pivot degenerate artificials out, then drop redundant rows and columns
    for r in range(m):
        if basis[r] >= n_struct:
            pivot_col = next(
                (j for j in range(n_struct) if abs(tableau[r, j]) > _EPS), None
            )
            if pivot_col is not None:
                _pivot(tableau, basis, r, pivot_col)
    keep = [r for r in range(m) if basis[r] < n_struct]
    tableau = np.hstack([tableau[:, :n_struct], tableau[:, -1:]])
    tableau = np.vstack([tableau[keep], np.zeros((1, n_struct + 1))])
    basis = basis[keep]

    # phase 2: the real objective, reduced against the current basis
    tableau[-1, :n] = c
    for r, col in enumerate(basis):
        if tableau[-1, col] != 0.0:
            tableau[-1] -= tableau[-1, col] * tableau[r]
    status = _iterate(tableau, basis, n_struct)
    if status == "unbounded":
        return LPResult("unbounded", None, None)
    x = np.zeros(n)
    for r, col in enumerate(basis):
        if col < n:
            x[col] = tableau[r, -1]
    return LPResult("optimal", x, float(c @ x))
