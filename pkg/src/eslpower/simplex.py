"""Dense tableau simplex for ``max c@x s.t. A@x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible, so no phase one is needed. Entering variables follow
Dantzig's rule (most negative reduced cost, lowest index on ties); after a run
of degenerate pivots the solver switches to Bland's rule for good, which
rules out cycling.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure


class Unbounded(Exception):
    """Objective is unbounded above."""


@dataclass
class SimplexResult:
    x: np.ndarray
    duals: np.ndarray
    objective: float
    basis: np.ndarray
    pivots: int
    bland: bool


def simplex_max(c, A, b, *, tol=1e-11, max_pivots=10**6, degenerate_limit=50) -> SimplexResult:
    """Solve ``max c@x s.t. A@x <= b, x >= 0``.

    ``duals`` are the shadow prices of the rows of ``A``, recomputed from the
    final basis with a direct solve rather than read off the tableau.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("simplex_max needs b >= 0")

    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = -c
    basis = np.arange(n, n + m)

    pivots = 0
    degenerate_run = 0
    bland = False
    while True:
        reduced = tab[m, :-1]
        if bland:
            candidates = np.flatnonzero(reduced < -tol)
            if candidates.size == 0:
                break
            j = candidates[0]
        else:
            j = int(np.argmin(reduced))
            if reduced[j] >= -tol:
                break
        col = tab[:m, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:
            raise Unbounded(f"column {j} is unbounded")
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Leaving variable: lowest basis index among ties (Bland-compatible).
        i = ties[np.argmin(basis[ties])]

        tab[i] /= tab[i, j]
        others = np.arange(m + 1) != i
        tab[others] -= np.outer(tab[others, j], tab[i])
        basis[i] = j

        pivots += 1
        degenerate_run = degenerate_run + 1 if best <= tol else 0
        if degenerate_run > degenerate_limit:
            bland = True
        if pivots >= max_pivots:
            raise NumericalFailure(f"simplex hit the pivot cap ({max_pivots})")

    full = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    B = full[:, basis]
    x_basic = np.linalg.solve(B, b)
    duals = np.linalg.solve(B.T, cost[basis])
    x = np.zeros(n + m)
    x[basis] = x_basic
    return SimplexResult(x[:n], duals, float(c @ x[:n]), basis.copy(), pivots, bland)
