"""Dense two-phase simplex for small linear programs in standard form.

Solves min c'x subject to A x = b, x >= 0. Bland's smallest-index rule keeps
the method from cycling on the degenerate bases that shrink problems produce.
Only meant for the small instances this package generates (tens of rows); no
sparsity, no revised factorizations.
"""

from __future__ import annotations

import numpy as np

_TOL = 1e-9


class InfeasibleError(ValueError):
    """The constraint set A x = b, x >= 0 is empty."""


class UnboundedError(ValueError):
    """The objective decreases without bound over the feasible set."""


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and abs(tableau[r, col]) > 0:
            tableau[r] -= tableau[r, col] * tableau[row]


def _run_simplex(tableau: np.ndarray, basis: list, num_vars: int) -> None:
    """Iterate to optimality in place. Last row is the (negated) objective,
    last column the rhs."""
    while True:
        cost = tableau[-1, :num_vars]
        entering = -1
        for j in range(num_vars):
            if cost[j] < -_TOL:
                entering = j  # Bland: first improving column
                break
        if entering < 0:
            return
        leaving, best = -1, np.inf
        for r in range(len(basis)):
            coef = tableau[r, entering]
            if coef > _TOL:
                ratio = tableau[r, -1] / coef
                if ratio < best - _TOL or (ratio < best + _TOL and
                                           (leaving < 0 or basis[r] < basis[leaving])):
                    leaving, best = r, min(best, ratio)
        if leaving < 0:
            raise UnboundedError("no leaving row for an improving column")
        _pivot(tableau, leaving, entering)
        basis[leaving] = entering


def solve_lp(c: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Minimize c'x over A x = b, x >= 0.

    Returns (x, value). x is a basic optimal solution, so it has at most
    rank(A) nonzero coordinates. Raises InfeasibleError / UnboundedError.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    rows, cols = a.shape
    if c.shape != (cols,) or b.shape != (rows,):
        raise ValueError("inconsistent LP dimensions")
    a = a.copy()
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1

    # phase 1: drive artificial variables out of the basis
    tableau = np.zeros((rows + 1, cols + rows + 1))
    tableau[:rows, :cols] = a
    tableau[:rows, cols:cols + rows] = np.eye(rows)
    tableau[:rows, -1] = b
    tableau[-1, :cols] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = list(range(cols, cols + rows))
    _run_simplex(tableau, basis, cols + rows)
    if tableau[-1, -1] < -1e-7:
        raise InfeasibleError(f"phase-1 optimum {-tableau[-1, -1]:.3e} > 0")
    for r, bv in enumerate(basis):
        if bv >= cols:  # degenerate artificial still basic: pivot it out if possible
            for j in range(cols):
                if abs(tableau[r, j]) > _TOL:
                    _pivot(tableau, r, j)
                    basis[r] = j
                    break

    # phase 2 on the original objective, reduced against the current basis
    tableau = tableau[:, list(range(cols)) + [-1]]
    tableau[-1, :] = 0.0
    tableau[-1, :cols] = c
    for r, bv in enumerate(basis):
        if bv < cols:
            tableau[-1] -= c[bv] * tableau[r]
    _run_simplex(tableau, basis, cols)

    x = np.zeros(cols)
    for r, bv in enumerate(basis):
        if bv < cols:
            x[bv] = tableau[r, -1]
    x = np.maximum(x, 0.0)
    return x, float(c @ x)
