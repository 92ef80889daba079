"""Small dense two-phase simplex solver with Bland's rule.

The geometry module needs exact, deterministic answers to tiny feasibility
LPs (interior witness, bounding box, face non-emptiness).  Problem sizes are
a handful of variables and a few dozen constraints, so a plain dense tableau
is simpler and more predictable than an external solver.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LPFailure

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

_PIVOT_TOL = 1e-10


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None
    value: float | None


def _pivot(tab, basis, row, col):
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and abs(tab[r, col]) > 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _bland_iterate(tab, basis, ncols, max_iter):
    """Maximize the objective stored in the last tableau row.

    Returns True on optimality, False on unboundedness.
    """
    m = tab.shape[0] - 1
    for _ in range(max_iter):
        obj = tab[-1, :ncols]
        # Bland: smallest-index column with positive reduced cost.
        enter = -1
        for j in range(ncols):
            if obj[j] > _PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return True
        leave = -1
        best = np.inf
        for r in range(m):
            a = tab[r, enter]
            if a > _PIVOT_TOL:
                ratio = tab[r, -1] / a
                if ratio < best - _PIVOT_TOL or (
                    abs(ratio - best) <= _PIVOT_TOL
                    and (leave < 0 or basis[r] < basis[leave])
                ):
                    best = ratio
                    leave = r
        if leave < 0:
            return False
        _pivot(tab, basis, leave, enter)
    raise LPFailure("simplex iteration limit exceeded")


def solve_lp(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, max_iter=20000):
    """Maximize ``c @ x`` subject to ``a_ub x <= b_ub``, ``a_eq x = b_eq``,
    ``x >= 0``.  Returns an :class:`LPSolution`."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = []
    rhs = []
    kinds = []  # "ub" or "eq"
    if a_ub is not None:
        a_ub = np.atleast_2d(np.asarray(a_ub, dtype=float))
        for row, b in zip(a_ub, np.atleast_1d(b_ub)):
            rows.append(row)
            rhs.append(float(b))
            kinds.append("ub")
    if a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        for row, b in zip(a_eq, np.atleast_1d(b_eq)):
            rows.append(row)
            rhs.append(float(b))
            kinds.append("eq")
    m = len(rows)
    if m == 0:
        raise LPFailure("LP without constraints")

    a = np.vstack(rows)
    b = np.array(rhs)
    n_slack = sum(1 for k in kinds if k == "ub")

    # Columns: [x | slack | artificial], one artificial per row.
    full = np.zeros((m, n + n_slack + m))
    full[:, :n] = a
    si = 0
    for i, kind in enumerate(kinds):
        if kind == "ub":
            full[i, n + si] = 1.0
            si += 1
    # Normalize rhs >= 0 after slacks are placed so slack signs flip too.
    for i in range(m):
        if b[i] < 0:
            full[i] *= -1.0
            b[i] = -b[i]
    for i in range(m):
        full[i, n + n_slack + i] = 1.0

    ncols = n + n_slack + m
    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :ncols] = full
    tab[:m, -1] = b
    basis = [n + n_slack + i for i in range(m)]

    # Phase 1: maximize -sum(artificials).
    tab[-1, n + n_slack : ncols] = -1.0
    for i in range(m):
        tab[-1] += tab[i]  # price out the artificial basis
    if not _bland_iterate(tab, basis, n + n_slack, max_iter):
        raise LPFailure("phase-1 reported unbounded")
    # The stored cell is the negated phase-1 objective, i.e. sum(artificials).
    if tab[-1, -1] > 1e-8:
        return LPSolution(INFEASIBLE, None, None)
    # Drive leftover artificials out of the basis.
    for r in range(m):
        if basis[r] >= n + n_slack:
            piv = -1
            for j in range(n + n_slack):
                if abs(tab[r, j]) > _PIVOT_TOL:
                    piv = j
                    break
            if piv >= 0:
                _pivot(tab, basis, r, piv)

    # Phase 2: original objective over structural + slack columns.
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    tab[:, n + n_slack : ncols] = 0.0  # retire artificials
    for r in range(m):
        if basis[r] < n + n_slack and abs(tab[-1, basis[r]]) > 0.0:
            tab[-1] -= tab[-1, basis[r]] * tab[r]
    if not _bland_iterate(tab, basis, n + n_slack, max_iter):
        return LPSolution(UNBOUNDED, None, None)

    x = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tab[r, -1]
    return LPSolution(OPTIMAL, x, float(c @ x))
