"""Phase-1 simplex for small dense feasibility problems ``A x = b, x >= 0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    x: np.ndarray
    # optimal phase-1 value: min sum(b' - A' x) over x >= 0 with A' x <= b', rows flipped so b' >= 0
    infeasibility: float
    iterations: int


def phase_one(A, b, tol: float = 1e-9, max_iters: int = 10_000) -> FeasibilityResult:
    """Minimize the sum of artificial variables with Bland's rule.

    Rows are sign-flipped so that ``b >= 0``; one artificial per row forms the
    starting basis.  The optimum is zero exactly when the system is feasible.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # tableau: [A | I | b], objective row holds reduced costs of phase 1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    it = 0
    while it < max_iters:
        cost = T[m, :-1]
        entering = next((k for k in range(n + m) if cost[k] < -PIVOT_TOL), None)
        if entering is None:
            break
        col = T[:m, entering]
        rows = [r for r in range(m) if col[r] > PIVOT_TOL]
        if not rows:  # cannot happen in phase 1 (objective bounded below by 0)
            break
        ratios = [T[r, -1] / col[r] for r in rows]
        best = min(ratios)
        # Bland: among tied rows choose the smallest basic index
        leave = min((r for r, q in zip(rows, ratios) if q <= best + PIVOT_TOL), key=lambda r: basis[r])
        T[leave] /= T[leave, entering]
        for r in range(m + 1):
            if r != leave and T[r, entering] != 0.0:
                T[r] -= T[r, entering] * T[leave]
        basis[leave] = entering
        it += 1

    x = np.zeros(n + m)
    for r, k in enumerate(basis):
        x[k] = T[r, -1]
    sol = np.clip(x[:n], 0.0, None)
    infeas = float(np.abs(A @ sol - b).sum())
    return FeasibilityResult(infeas <= tol, sol, infeas, it)
