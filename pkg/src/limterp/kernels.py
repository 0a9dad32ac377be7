"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version that numba compiles and
a vectorised numpy version.  ``LIMTERP_DISABLE_NUMBA=1`` selects the numpy
path; both are importable directly for benchmarking and cross-checks.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, optional_njit

# ---------------------------------------------------------------------------
# log K(f, e^s) for a diagonal couple


def diag_logk_numpy(s, logabsf, logw0, logw1):
    s = np.asarray(s, dtype=np.float64)
    terms = logabsf[None, :] + np.minimum(logw0[None, :], s[:, None] + logw1[None, :])
    top = np.max(terms, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = safe + np.log(np.sum(np.exp(terms - safe[:, None]), axis=1))
    return np.where(np.isfinite(top), out, top)


@optional_njit
def diag_logk_loop(s, logabsf, logw0, logw1):
    n = logabsf.shape[0]
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        top = -np.inf
        for k in range(n):
            v = logabsf[k] + min(logw0[k], s[i] + logw1[k])
            if v > top:
                top = v
        if top == -np.inf:
            out[i] = -np.inf
            continue
        acc = 0.0
        for k in range(n):
            v = logabsf[k] + min(logw0[k], s[i] + logw1[k])
            acc += math.exp(v - top)
        out[i] = top + math.log(acc)
    return out


# ---------------------------------------------------------------------------
# K(f, t; X0, X0 ∩ X1) for a diagonal base couple.
#
# K = max over lam in [0, 1] of sum_j |f_j| min(w0_j, t (lam w0_j + (1 - lam) w1_j));
# the inner function is concave piecewise linear in lam, so its maximum sits at
# an endpoint or at one of the coordinate breakpoints.


def intersection_k_numpy(t, absf, w0, w1):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    big = t >= 1.0
    out[big] = np.dot(w0, absf)
    ts = t[~big]
    if ts.size:
        dw = w0 - w1
        with np.errstate(divide="ignore", invalid="ignore"):
            lam_k = (w0[None, :] / ts[:, None] - w1[None, :]) / dw[None, :]
        lam_k = np.where(np.abs(dw)[None, :] > 0, lam_k, 0.0)
        lam_k = np.clip(lam_k, 0.0, 1.0)
        cands = np.concatenate([np.zeros((ts.size, 1)), np.ones((ts.size, 1)), lam_k], axis=1)
        # shape (T, C, n)
        c = cands[:, :, None] * w0[None, None, :] + (1.0 - cands[:, :, None]) * w1[None, None, :]
        vals = np.minimum(w0[None, None, :], ts[:, None, None] * c) @ absf
        out[~big] = np.max(vals, axis=1)
    return out


@optional_njit
def intersection_k_loop(t, absf, w0, w1):
    n = absf.shape[0]
    out = np.empty(t.shape[0])
    full = 0.0
    for j in range(n):
        full += w0[j] * absf[j]
    for i in range(t.shape[0]):
        ti = t[i]
        if ti >= 1.0:
            out[i] = full
            continue
        best = -1.0
        for c in range(n + 2):
            if c == 0:
                lam = 0.0
            elif c == 1:
                lam = 1.0
            else:
                k = c - 2
                dw = w0[k] - w1[k]
                if dw == 0.0:
                    lam = 0.0
                else:
                    lam = (w0[k] / ti - w1[k]) / dw
                    lam = min(1.0, max(0.0, lam))
            acc = 0.0
            for j in range(n):
                acc += absf[j] * min(w0[j], ti * (lam * w0[j] + (1.0 - lam) * w1[j]))
            if acc > best:
                best = acc
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# worst multiplicative gap to a running envelope (log domain)


def envelope_gap_numpy(g):
    """max_i (max_{j<=i} g_j - g_i), the log of the worst factor below the running max."""
    return float(np.max(np.maximum.accumulate(g) - g))


@optional_njit
def envelope_gap_loop(g):
    run = -np.inf
    worst = 0.0
    for i in range(g.shape[0]):
        if g[i] > run:
            run = g[i]
        d = run - g[i]
        if d > worst:
            worst = d
    return worst


# ---------------------------------------------------------------------------
# dual norms of the dyadic block costs
#
# Block i charges max(alpha_i <w0, x>, beta_i <w1, x>) for x >= 0.  Its dual
# value at g is max <g, x> over {x >= 0, alpha_i <w0,x> <= 1, beta_i <w1,x> <= 1};
# the maximiser is a vertex with at most two nonzero coordinates.


def block_dual_numpy(g, alpha, beta, w0, w1):
    M = alpha.shape[0]
    n = g.shape[0]
    out = np.zeros(M)
    for i in range(M):
        a0 = alpha[i] * w0
        a1 = beta[i] * w1
        with np.errstate(divide="ignore"):
            cap = np.minimum(np.where(a0 > 0, 1.0 / a0, np.inf), np.where(a1 > 0, 1.0 / a1, np.inf))
        best = float(np.max(g * cap))
        if alpha[i] > 0 and beta[i] > 0 and n > 1:
            J, K = np.triu_indices(n, 1)
            det = a0[J] * a1[K] - a0[K] * a1[J]
            ok = np.abs(det) > 1e-300
            with np.errstate(divide="ignore", invalid="ignore"):
                xj = (a1[K] - a0[K]) / det
                xk = (a0[J] - a1[J]) / det
            ok &= (xj >= 0) & (xk >= 0)
            if np.any(ok):
                best = max(best, float(np.max((g[J] * xj + g[K] * xk)[ok])))
        out[i] = max(best, 0.0)
    return out


@optional_njit
def block_dual_loop(g, alpha, beta, w0, w1):
    M = alpha.shape[0]
    n = g.shape[0]
    out = np.zeros(M)
    for i in range(M):
        best = 0.0
        for k in range(n):
            cap = np.inf
            if alpha[i] > 0:
                cap = min(cap, 1.0 / (alpha[i] * w0[k]))
            if beta[i] > 0:
                cap = min(cap, 1.0 / (beta[i] * w1[k]))
            v = g[k] * cap
            if v > best:
                best = v
        if alpha[i] > 0 and beta[i] > 0:
            for j in range(n):
                for k in range(j + 1, n):
                    a0j = alpha[i] * w0[j]
                    a0k = alpha[i] * w0[k]
                    a1j = beta[i] * w1[j]
                    a1k = beta[i] * w1[k]
                    det = a0j * a1k - a0k * a1j
                    if abs(det) <= 1e-300:
                        continue
                    xj = (a1k - a0k) / det
                    xk = (a0j - a1j) / det
                    if xj >= 0 and xk >= 0:
                        v = g[j] * xj + g[k] * xk
                        if v > best:
                            best = v
        out[i] = best
    return out


# ---------------------------------------------------------------------------
# one-hot representation bound, minimised over contiguous sub-windows


def _onehot_cost_numpy(absf, alpha, beta, w0, w1, q, lo, hi):
    unit = np.maximum(alpha[lo:hi, None] * w0[None, :], beta[lo:hi, None] * w1[None, :])
    pick = np.argmin(unit, axis=0) + lo
    cost = np.zeros(alpha.shape[0])
    for i in np.unique(pick):
        sel = pick == i
        cost[i] = max(alpha[i] * np.dot(w0[sel], absf[sel]), beta[i] * np.dot(w1[sel], absf[sel]))
    if np.isinf(q):
        return float(np.max(cost))
    return float(np.sum(cost**q) ** (1.0 / q))


def onehot_upper_numpy(absf, alpha, beta, w0, w1, q):
    M = alpha.shape[0]
    best = np.inf
    for lo in range(M):
        for hi in range(lo + 1, M + 1):
            best = min(best, _onehot_cost_numpy(absf, alpha, beta, w0, w1, q, lo, hi))
    return best


@optional_njit
def onehot_upper_loop(absf, alpha, beta, w0, w1, q):
    M = alpha.shape[0]
    n = absf.shape[0]
    best = np.inf
    s0 = np.zeros(M)
    s1 = np.zeros(M)
    for lo in range(M):
        for hi in range(lo + 1, M + 1):
            for i in range(M):
                s0[i] = 0.0
                s1[i] = 0.0
            for k in range(n):
                bi = lo
                bu = np.inf
                for i in range(lo, hi):
                    u = max(alpha[i] * w0[k], beta[i] * w1[k])
                    if u < bu:
                        bu = u
                        bi = i
                s0[bi] += w0[k] * absf[k]
                s1[bi] += w1[k] * absf[k]
            total = 0.0
            for i in range(lo, hi):
                c = max(alpha[i] * s0[i], beta[i] * s1[i])
                if np.isinf(q):
                    total = max(total, c)
                else:
                    total += c**q
            if not np.isinf(q):
                total = total ** (1.0 / q)
            if total < best:
                best = total
    return best


if USE_NUMBA:
    diag_logk = diag_logk_loop
    intersection_k = intersection_k_loop
    envelope_gap = envelope_gap_loop
    block_dual = block_dual_loop
    onehot_upper = onehot_upper_loop
else:
    diag_logk = diag_logk_numpy
    intersection_k = intersection_k_numpy
    envelope_gap = envelope_gap_numpy
    block_dual = block_dual_numpy
    onehot_upper = onehot_upper_numpy
