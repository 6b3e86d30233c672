"""Dense two-phase simplex for small equality-form linear programs.

    minimize c.x  subject to  A x = b,  x >= 0

Ties in the ratio test are broken lexicographically on the rows of the
basis inverse, which rules out cycling on degenerate problems.  Meant for
the handful-of-rows problems that evaluate S-functions, where being exact
matters more than scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-11
_FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float
    x: np.ndarray | None
    iterations: int


def _lexmin_row(tab: np.ndarray, rows: np.ndarray, col: int, lex_cols: list[int]) -> int:
    cand = rows
    for j in lex_cols:
        ratios = tab[cand, j] / tab[cand, col]
        best = ratios.min()
        cand = cand[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
        if cand.size == 1:
            break
    return int(cand[0])


def _pivot(tab: np.ndarray, r: int, c: int) -> None:
    tab[r] /= tab[r, c]
    col = tab[:, c].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])


def _run(tab, basis, cost_row, allowed, lex_cols, max_iter):
    m = len(basis)
    it = 0
    while it < max_iter:
        red = tab[cost_row, :-1]
        entering = np.where(allowed & (red < -_PIVOT_TOL))[0]
        if entering.size == 0:
            return "optimal", it
        c = int(entering[np.argmin(red[entering])])
        rows = np.where(tab[:m, c] > _PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded", it
        r = _lexmin_row(tab, rows, c, lex_cols)
        _pivot(tab, r, c)
        basis[r] = c
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def simplex(c, A, b, max_iter: int = 10_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, nvar = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    # columns: structural | artificial | rhs ; rows: constraints | phase-2 cost | phase-1 cost
    tab = np.zeros((m + 2, nvar + m + 1))
    tab[:m, :nvar] = A
    tab[:m, nvar:nvar + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :nvar] = c
    tab[m + 1, :nvar] = -A.sum(axis=0)
    tab[m + 1, -1] = -b.sum()
    basis = list(range(nvar, nvar + m))
    lex_cols = [nvar + m] + list(range(nvar, nvar + m))
    allowed = np.zeros(nvar + m, dtype=bool)
    allowed[:nvar] = True

    _, it1 = _run(tab, basis, m + 1, allowed, lex_cols, max_iter)
    scale = max(1.0, float(np.abs(b).max()) if m else 1.0)
    if -tab[m + 1, -1] > _FEAS_TOL * scale:
        return LPResult("infeasible", np.inf, None, it1)

    # drive zero-level artificials out of the basis where a structural column allows it
    for r, var in enumerate(basis):
        if var >= nvar:
            cols = np.where(np.abs(tab[r, :nvar]) > _PIVOT_TOL)[0]
            if cols.size:
                _pivot(tab, r, int(cols[0]))
                basis[r] = int(cols[0])

    status, it2 = _run(tab, basis, m, allowed, lex_cols, max_iter)
    if status == "unbounded":
        return LPResult(status, -np.inf, None, it1 + it2)
    x = np.zeros(nvar)
    for r, var in enumerate(basis):
        if var < nvar:
            x[var] = tab[r, -1]
    x = np.maximum(x, 0.0)
    return LPResult("optimal", float(c @ x), x, it1 + it2)
