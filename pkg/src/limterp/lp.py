"""Dense two-phase simplex for the small LPs of the K-functional oracle.

minimise c @ x  subject to  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0.

Bland's rule keeps it finite on degenerate problems; sizes here are a few
dozen variables, so a full tableau is the simplest thing that works.
"""

from dataclasses import dataclass

import numpy as np


class LpError(RuntimeError):
    pass


@dataclass
class LpResult:
    x: np.ndarray
    fun: float
    status: str
    iterations: int


def _pivot(T, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, n_cols, tol, max_iter, floor=None):
    """Simplex iterations on tableau T (objective in the last row); returns iterations used.

    With ``floor`` the run stops as soon as the objective is within it of zero
    (phase 1 is done once infeasibility is at roundoff level).
    """
    m = T.shape[0] - 1
    for it in range(max_iter):
        if floor is not None and -T[-1, -1] <= floor:
            return it
        red = T[-1, :n_cols]
        cand = np.nonzero(red < -tol)[0]
        if cand.size == 0:
            return it
        c = int(cand[0])
        col = T[:m, c]
        pos = col > tol
        if not np.any(pos):
            raise LpError("unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = np.min(ratios)
        ties = np.nonzero(ratios <= best + tol * max(1.0, abs(best)))[0]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, c)
        basis[r] = c
    raise LpError("iteration limit")


def linprog_dense(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-11, max_iter=10000):
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    rows, rhs, slack_sign = [], [], []
    if A_ub is not None:
        for a, b in zip(np.atleast_2d(A_ub), np.atleast_1d(b_ub)):
            rows.append(np.asarray(a, dtype=np.float64))
            rhs.append(float(b))
            slack_sign.append(1.0)
    if A_eq is not None:
        for a, b in zip(np.atleast_2d(A_eq), np.atleast_1d(b_eq)):
            rows.append(np.asarray(a, dtype=np.float64))
            rhs.append(float(b))
            slack_sign.append(0.0)
    m = len(rows)
    n_slack = int(sum(1 for s in slack_sign if s))
    total = n + n_slack + m
    T = np.zeros((m + 1, total + 1))
    k = n
    for i in range(m):
        T[i, :n] = rows[i]
        if slack_sign[i]:
            T[i, k] = 1.0
            k += 1
        T[i, -1] = rhs[i]
        if rhs[i] < 0:
            T[i] *= -1.0
        T[i, n + n_slack + i] = 1.0
    basis = list(range(n + n_slack, total))

    # phase 1: minimise the sum of artificials
    T[-1, :] = 0.0
    T[-1, n + n_slack:total] = 1.0
    for i in range(m):
        T[-1] -= T[i]
    scale = max(1.0, float(np.max(np.abs(T))))
    tol = tol * scale
    it1 = _run(T, basis, total, tol, max_iter, floor=tol)
    if -T[-1, -1] > 1e-9 * scale:
        return LpResult(np.full(n, np.nan), np.nan, "infeasible", it1)
    # drive remaining artificials out of the basis
    for r in range(m):
        if basis[r] >= n + n_slack:
            nz = np.nonzero(np.abs(T[r, :n + n_slack]) > tol)[0]
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])
    keep = [r for r in range(m) if basis[r] < n + n_slack]
    T = np.vstack([T[keep], T[-1:]])
    T = np.delete(T, np.s_[n + n_slack:total], axis=1)
    basis = [basis[r] for r in keep]

    # phase 2
    cols = n + n_slack
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i, bi in enumerate(basis):
        if T[-1, bi] != 0.0:
            T[-1] -= T[-1, bi] * T[i]
    it2 = _run(T, basis, cols, tol, max_iter)
    x = np.zeros(cols)
    for i, bi in enumerate(basis):
        x[bi] = T[i, -1]
    return LpResult(x[:n], float(c @ x[:n]), "optimal", it1 + it2)
