"""Dense two-phase simplex with Bland's anti-cycling rule.

Small, dependency-free and deterministic: for a fixed input the pivot
sequence, and therefore the returned vertex, is always the same.
"""

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    value: float | None
    iterations: int


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for k in range(T.shape[0]):
        if k != row and T[k, col] != 0.0:
            T[k] -= T[k, col] * T[row]
    basis[row] = col


def _run(T, basis, cols, tol, max_iter):
    """Maximize the objective stored (as reduced costs) in the last row of ``T``."""
    m = T.shape[0] - 1
    it = 0
    while it < max_iter:
        z = T[-1, cols]
        enter = np.flatnonzero(z > tol)
        if enter.size == 0:
            return OPTIMAL, it
        col = cols[enter[0]]
        column = T[:m, col]
        candidates = np.flatnonzero(column > tol)
        if candidates.size == 0:
            return UNBOUNDED, it
        ratios = T[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + tol * max(1.0, abs(best))]
        row = tied[np.argmin([basis[r] for r in tied])]
        _pivot(T, basis, row, col)
        it += 1
    raise RuntimeError(f"simplex did not terminate within {max_iter} pivots")


def _set_objective(T, basis, c):
    """Write reduced costs ``c - c_B B^{-1} A`` (and ``-c_B b``) into the last row."""
    m = T.shape[0] - 1
    T[-1, :] = 0.0
    T[-1, : c.size] = c
    for r in range(m):
        cb = c[basis[r]] if basis[r] < c.size else 0.0
        if cb != 0.0:
            T[-1] -= cb * T[r]


def simplex_max(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, tol=1e-10, max_iter=10_000):
    """Solve ``max c.x  s.t.  A_eq x = b_eq, A_ub x <= b_ub, x >= 0``.

    Returns an :class:`LPResult` whose ``x`` is a basic (vertex) solution.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    n_struct = n + m_ub  # structural variables plus slacks

    A = np.zeros((m, n_struct))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: one artificial per row, maximize -sum(artificials)
    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m, :n_struct] = A
    T[:m, n_struct:n_struct + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n_struct, n_struct + m))
    c1 = np.zeros(n_struct + m)
    c1[n_struct:] = -1.0
    _set_objective(T, basis, c1)
    all_cols = np.arange(n_struct + m)
    _, it1 = _run(T, basis, all_cols, tol, max_iter)
    infeas = T[-1, -1]  # the corner entry holds minus the objective, i.e. the artificial sum
    if infeas >1e-8 * max(1.0, np.abs(b).max(initial=0.0)):
        return LPResult(INFEASIBLE, None, None, it1)

    # drive artificials out of the basis; rows where that is impossible are redundant
    keep = []
    for r in range(m):
        if basis[r] >= n_struct:
            row = T[r, :n_struct]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                _pivot(T, basis, r, nz[0])
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[r] for r in keep]
    T = np.hstack([T[:, :n_struct], T[:, -1:]])

    # phase 2
    c2 = np.zeros(n_struct)
    c2[:n] = c
    _set_objective(T, basis, c2)
    status, it2 = _run(T, basis, np.arange(n_struct), tol, max_iter)
    if status != OPTIMAL:
        return LPResult(status, None, None, it1 + it2)
    x = np.zeros(n_struct)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult(OPTIMAL, x, float(c @ x), it1 + it2)
