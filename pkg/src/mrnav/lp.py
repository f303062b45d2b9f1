"""Dense two-phase simplex for the small linear programs in this package.

The problems have at most ~10 structural variables and a few dozen rows, so
a tableau method with Bland's rule (lowest-index entering column, lowest
basic-variable index on ratio ties) is fast, immune to cycling, and fully
deterministic across platforms.
"""
from __future__ import annotations

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_TOL = 1e-9


def _pivot_loop(tableau, basis, n_enterable, max_iter):
    """Run simplex pivots in place until optimal/unbounded; returns status."""
    m = len(basis)
    for _ in range(max_iter):
        cost_row = tableau[m, :n_enterable]
        candidates = np.flatnonzero(cost_row < -_TOL)
        if candidates.size == 0:
            return OPTIMAL
        col = int(candidates[0])  # Bland: lowest index
        ratios_col = tableau[:m, col]
        rows = np.flatnonzero(ratios_col > _TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = tableau[rows, -1] / ratios_col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12]
        row = int(tied[np.argmin(basis[tied])])  # Bland: lowest basic index
        piv = tableau[row, col]
        tableau[row, :] /= piv
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row, :])
        basis[row] = col
    raise RuntimeError("simplex iteration limit exceeded")


def solve_lp(c, A, b, max_iter=5000):
    """Minimize c @ x subject to A @ x <= b and x >= 0.

    Returns (status, x, objective); x and objective are None unless optimal.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")

    flip = b < 0
    signs = np.where(flip, -1.0, 1.0)
    A2 = A * signs[:, None]
    b2 = b * signs
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size
    n_cols = n + m + n_art

    tableau = np.zeros((m + 1, n_cols + 1))
    tableau[:m, :n] = A2
    tableau[np.arange(m), n + np.arange(m)] = signs
    for k, r in enumerate(art_rows):
        tableau[r, n + m + k] = 1.0
    tableau[:m, -1] = b2

    basis = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(n_art)

    if n_art:
        # Phase 1: minimize the sum of artificials.
        tableau[m, :] = 0.0
        tableau[m, n + m:n_cols] = 1.0
        for r in art_rows:
            tableau[m, :] -= tableau[r, :]
        status = _pivot_loop(tableau, basis, n_cols, max_iter)
        if status != OPTIMAL or -tableau[m, -1] > 1e-7:
            return INFEASIBLE, None, None
        # Drive residual artificials out of the basis where possible.
        for row in np.flatnonzero(basis >= n + m):
            pivots = np.flatnonzero(np.abs(tableau[row, :n + m]) > _TOL)
            if pivots.size == 0:
                continue  # redundant row; artificial stays basic at zero
            col = int(pivots[0])
            piv = tableau[row, col]
            tableau[row, :] /= piv
            factors = tableau[:, col].copy()
            factors[row] = 0.0
            tableau -= np.outer(factors, tableau[row, :])
            basis[row] = col

    # Phase 2: restore the real objective expressed over the current basis.
    tableau[m, :] = 0.0
    tableau[m, :n] = c
    for i in range(m):
        if basis[i] < n and abs(tableau[m, basis[i]]) > 0.0:
            tableau[m, :] -= tableau[m, basis[i]] * tableau[i, :]
    status = _pivot_loop(tableau, basis, n + m, max_iter)
    if status != OPTIMAL:
        return status, None, None

    x_full = np.zeros(n_cols)
    x_full[basis] = tableau[:m, -1]
    x = x_full[:n]
    return OPTIMAL, x, float(c @ x)
