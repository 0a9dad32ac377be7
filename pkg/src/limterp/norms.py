"""Weighted limiting K- and J-norms.

K-norms integrate t^-theta v(t) K(f, t) against dt/t in the log variable.  For
couples whose K-functional is diagonal (the base couple, its sum couple and
its swap) K(f, t) = sum_k |f_k| min(w0_k, t w1_k) is linear in |f|, so the
norm reduces to a fixed weighted quadrature of a basis matrix: exact tail
nodes cover everything outside the grid, and grid refinement only moves the
last digits.

J-norms are discretised on dyadic scales 2^m.  A representation puts a piece
x_m >= 0 of |f| at each scale, costing v(2^m) 2^(-m theta) J(x_m, 2^m); the
norm is the l_q norm of those costs minimised over all splits.  Scales below
and above the window are collapsed into one block each, which is exact once
the window contains every kink log2(w0_k / w1_k).
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.special import logsumexp

from . import kernels
from . import quadrature as quad
from .couples import (
    DerivedCouple, DiagonalCouple, StepFunctionCouple, _data, diagonal_weights, k_values, log_k,
)
from .sv import LogGrid, SvExpr
from .transforms import conjugate

INTERVALS = {"(0,inf)": "full", "(1,inf)": "upper", "(0,1)": "lower"}
TRIVIAL_ZERO = "trivial_zero"
DEGENERATE = "degenerate_seminorm"
INTERMEDIATE = "intermediate"


class NormAccuracyError(ArithmeticError):
    pass


class WindowError(ValueError):
    pass


def parse_interval(text):
    t = text.replace(" ", "").replace("∞", "inf")
    if t in INTERVALS:
        return INTERVALS[t]
    if t in INTERVALS.values():
        return t
    raise ValueError(f"unknown interval {text!r}; use one of {sorted(INTERVALS)}")


@dataclass(frozen=True, eq=False)
class NormSpec:
    q: float
    weight: SvExpr
    method: str = "K"
    couple: object = None
    interval: str = "full"
    theta: float = 0.0

    def __post_init__(self):
        if not 1 <= self.q <= math.inf:
            raise ValueError(f"q must lie in [1, inf], got {self.q}")
        if self.method not in ("K", "J"):
            raise ValueError(f"method must be K or J, got {self.method!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        object.__setattr__(self, "interval", parse_interval(self.interval))

    def with_(self, **kw):
        d = dict(q=self.q, weight=self.weight, method=self.method, couple=self.couple,
                 interval=self.interval, theta=self.theta)
        d.update(kw)
        return NormSpec(**d)

    def to_dict(self):
        label = {v: k for k, v in INTERVALS.items()}[self.interval]
        return {"theta": self.theta, "q": "inf" if math.isinf(self.q) else self.q,
                "weight": self.weight.to_str(), "method": self.method, "interval": label,
                "couple": getattr(self.couple, "tag", None)}


def _interval_bounds(interval):
    return {"full": (-math.inf, math.inf), "upper": (0.0, math.inf), "lower": (-math.inf, 0.0)}[interval]


# ---------------------------------------------------------------------------
# admissibility


def check_admissible_K(spec):
    """Finite ||t^(-theta-1/q) v(t) min(1, t)||_q over (0, inf), else the space is {0}."""
    q, th, v = spec.q, spec.theta, spec.weight

    def lg(s):
        return -th * s + v.logval(s) + np.minimum(s, 0.0)

    if math.isinf(q):
        val = quad.log_sup(lg, breaks=(0.0,))
    else:
        val = quad.log_integral(lambda s: q * lg(s), breaks=(0.0,))
    return INTERMEDIATE if val < math.inf else TRIVIAL_ZERO


def check_admissible_J(spec):
    """Finite ||t^(theta-1/q') / v(t) min(1, 1/t)||_q' over (0, inf), else J vanishes on X0 n X1."""
    qc, th, v = conjugate(spec.q), spec.theta, spec.weight

    def lg(s):
        return th * s - v.logval(s) + np.minimum(-s, 0.0)

    if math.isinf(qc):
        val = quad.log_sup(lg, breaks=(0.0,))
    else:
        val = quad.log_integral(lambda s: qc * lg(s), breaks=(0.0,))
    return INTERMEDIATE if val < math.inf else DEGENERATE


# ---------------------------------------------------------------------------
# K-norms


def _kinks(couple):
    w = diagonal_weights(couple)
    if w is not None:
        return sorted(set(np.log(w[0] / w[1]).tolist()))
    return []


@dataclass(eq=False)
class KBasis:
    """Quadrature nodes, log weights and the K basis matrix for one (spec, grid).

    Row j of ``phi`` holds min(w0_k, e^{s_j} w1_k); the last two rows are the
    exact right and left tails (w0 and w1 rows), whose weights are the tail
    integrals of the weight alone.
    """

    logw: np.ndarray
    phi: np.ndarray
    s: np.ndarray
    q: float
    s_lo: float
    s_hi: float
    tail_logsup: tuple = (-math.inf, -math.inf)

    def log_norm(self, absf):
        with np.errstate(divide="ignore"):
            lk = np.log(self.phi @ absf)
        if math.isinf(self.q):
            return float(np.max(self.logw + lk))
        return float(logsumexp(self.logw + self.q * lk)) / self.q


_BASIS_CACHE = {}
_BASIS_LOCK = threading.Lock()


def k_basis(spec, grid=None):
    grid = grid or LogGrid.centered()
    w = diagonal_weights(spec.couple)
    key = (id(spec), grid)
    with _BASIS_LOCK:
        hit = _BASIS_CACHE.get(key)
        if hit is not None and hit[0] is spec:
            return hit[1]
    w0, w1 = w
    kinks = _kinks(spec.couple)
    lo, hi = _interval_bounds(spec.interval)
    g_lo = max(lo, min(grid.s[0], min(kinks, default=0.0) - 1.0))
    g_hi = min(hi, max(grid.s[-1], max(kinks, default=0.0) + 1.0))
    step = math.log(10.0) / grid.ppd
    rule = quad.fixed_rule(g_lo, g_hi, breaks=kinks + [0.0], core_step=step)
    s = rule.s
    q, th, v = spec.q, spec.theta, spec.weight
    lv = v.logval(s) - th * s
    rows = [np.minimum(w0[None, :], np.exp(s)[:, None] * w1[None, :])]
    if math.isinf(q):
        logw = [lv]
    else:
        logw = [rule.logw + q * lv]
    tails = [-math.inf, -math.inf]
    if math.isinf(hi):
        rows.append(w0[None, :])
        if math.isinf(q):
            tails[0] = quad.log_sup(lambda x: v.logval(x) - th * x, g_hi, math.inf)
            logw.append([tails[0]])
        else:
            logw.append([quad.log_integral(lambda x: q * (v.logval(x) - th * x), g_hi, math.inf)])
    if math.isinf(lo):
        rows.append(w1[None, :])
        if math.isinf(q):
            tails[1] = quad.log_sup(lambda x: v.logval(x) + (1.0 - th) * x, -math.inf, g_lo)
            logw.append([tails[1]])
        else:
            logw.append([quad.log_integral(lambda x: q * (v.logval(x) + (1.0 - th) * x), -math.inf, g_lo)])
    basis = KBasis(np.concatenate([np.asarray(x, dtype=np.float64) for x in logw]),
                   np.vstack(rows), s, q, g_lo, g_hi, tuple(tails))
    with _BASIS_LOCK:
        _BASIS_CACHE[key] = (spec, basis)
    return basis


def _log_integrand(spec, f):
    v, th = spec.weight, spec.theta
    return lambda s: v.logval(s) - th * s + log_k(spec.couple, f, s)


def _k_breaks(spec, f):
    br = [0.0] + _kinks(spec.couple)
    if isinstance(spec.couple, StepFunctionCouple):
        with np.errstate(divide="ignore"):
            cum = np.cumsum(np.sort(_data(f).lengths))
        br += np.log(cum[np.isfinite(cum) & (cum > 0)]).tolist()
    return br


def k_norm(spec, f, grid=None):
    """||t^(-theta-1/q) v(t) K(f, t)||_q over the spec's interval; inf when it diverges."""
    if spec.method != "K":
        raise ValueError("k_norm needs a K spec")
    d = _data(f)
    if isinstance(d, np.ndarray) or isinstance(d, (list, tuple)):
        absf = np.abs(np.asarray(d, dtype=np.float64))
        if not np.any(absf):
            return 0.0
    elif not np.any(d.values):
        return 0.0
    lo, hi = _interval_bounds(spec.interval)
    if diagonal_weights(spec.couple) is not None:
        basis = k_basis(spec, grid)
        lv = basis.log_norm(absf)
        if math.isinf(spec.q):
            lv = _polish_sup(spec, f, basis, lv)
        return math.exp(lv) if lv < 709.0 else math.inf
    lg = _log_integrand(spec, f)
    br = _k_breaks(spec, f)
    if math.isinf(spec.q):
        grid = grid or LogGrid.centered()
        lv = quad.log_sup(lg, lo, hi, grid_s=grid.s, breaks=br)
    else:
        q = spec.q
        lv = quad.log_integral(lambda s: q * lg(s), lo, hi, breaks=br) / q
    return math.exp(lv) if lv < 709.0 else math.inf


def _polish_sup(spec, f, basis, lv):
    # refine the grid maximum between its neighbouring nodes with the exact integrand
    lg = _log_integrand(spec, f)
    s = basis.s
    vals = lg(s)
    i = int(np.argmax(vals))
    if vals[i] < lv - 1e-12:
        return lv    # a tail row carries the supremum
    a, b = s[max(i - 1, 0)], s[min(i + 1, s.size - 1)]
    if b > a:
        res = minimize_scalar(lambda x: -float(lg(np.array([x]))[0]), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-10})
        lv = max(lv, -float(res.fun))
    return lv


def k_norm_batch(spec, fs, grid=None):
    return np.array([k_norm(spec, f, grid) for f in fs])


# ---------------------------------------------------------------------------
# dyadic J-discretisation


@dataclass(frozen=True)
class DyadicScheme:
    m_min: int
    m_max: int
    tails: bool = True

    def __post_init__(self):
        if self.m_max < self.m_min:
            raise WindowError("empty dyadic window")

    @property
    def size(self):
        return self.m_max - self.m_min + 1

    def widened(self, k=1):
        return DyadicScheme(self.m_min - k, self.m_max + k, self.tails)

    @classmethod
    def for_couple(cls, couple, margin=2, tails=True):
        """Window containing every kink of the couple plus a margin."""
        w0, w1 = _block_weights(couple)
        r = np.log2(w0 / w1)
        lo = math.floor(min(float(np.min(r)), 0.0)) - margin
        hi = math.ceil(max(float(np.max(r)), 0.0)) + margin
        return cls(lo, hi, tails)


def _block_weights(couple):
    w = diagonal_weights(couple)
    if w is not None:
        return w
    if isinstance(couple, DerivedCouple) and couple.derivation == "intersection" and isinstance(
            couple.base, DiagonalCouple):
        return couple.base.w0, couple.base.w1
    raise ValueError("the J discretisation needs a diagonal couple or a couple derived from one")


def _is_intersection(couple):
    return isinstance(couple, DerivedCouple) and couple.derivation == "intersection"


def check_window(couple, scheme):
    """The window must contain every kink so the collapsed end blocks are exact."""
    w0, w1 = _block_weights(couple)
    r = np.log2(w0 / w1)
    need_lo = min(float(np.min(r)), 0.0) if _is_intersection(couple) else float(np.min(r))
    need_hi = max(float(np.max(r)), 0.0) if _is_intersection(couple) else float(np.max(r))
    if scheme.m_min > need_lo + 1e-12 or scheme.m_max < need_hi - 1e-12:
        raise WindowError(f"window [{scheme.m_min}, {scheme.m_max}] misses active scales "
                          f"[{need_lo:.3f}, {need_hi:.3f}]")


_DIRECT_TERMS = 4096


def _collapse(logcost, edge, side, qc):
    """Aggregated cost (sum cost_m^-q')^(-1/q') of all scales beyond ``edge``, in logs.

    side="left" sums m < edge, side="right" sums m > edge.  The first few
    thousand terms are summed directly; the rest is an integral, which is
    accurate to O(m^-2) relative there.  For q' = inf the sum is a minimum
    over the direct terms and far samples.
    """
    ln2 = math.log(2.0)
    if side == "left":
        ms = np.arange(edge - _DIRECT_TERMS, edge, dtype=np.float64)
        cut = (edge - _DIRECT_TERMS - 0.5) * ln2
        lo, hi = -math.inf, cut
    else:
        ms = np.arange(edge + 1, edge + 1 + _DIRECT_TERMS, dtype=np.float64)
        cut = (edge + _DIRECT_TERMS + 0.5) * ln2
        lo, hi = cut, math.inf
    if math.isinf(qc):
        far = quad.far_samples(lo, hi) / ln2
        return float(min(np.min(logcost(ms)), np.min(logcost(far)) if far.size else math.inf))
    terms = -qc * logcost(ms)
    direct = float(logsumexp(terms))
    outer = terms[0] if side == "left" else terms[-1]
    if outer < direct + math.log(1e-17):
        return -direct / qc   # geometric decay: the far scales do not register
    far = quad.log_integral(lambda s: -qc * logcost(s / ln2), lo, hi) - math.log(ln2)
    return -float(np.logaddexp(direct, far)) / qc


@dataclass(eq=False)
class Blocks:
    """Block cost data: block i charges max(alpha_i <w0, x>, beta_i <w1, x>)."""

    alpha: np.ndarray
    beta: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    scales: list


def j_blocks(spec, scheme, tails=None):
    couple = spec.couple
    w0, w1 = _block_weights(couple)
    inter = _is_intersection(couple)
    v, th = spec.weight, spec.theta
    ln2 = math.log(2.0)
    lo, hi = scheme.m_min, scheme.m_max
    if spec.interval == "upper":
        lo = max(lo, 0)
    elif spec.interval == "lower":
        hi = min(hi, -1)
    if hi < lo:
        raise WindowError("window does not meet the integration interval")
    tails = scheme.tails if tails is None else tails

    def log_c(m):
        m = np.asarray(m, dtype=np.float64)
        return v.logval(m * ln2) - th * m * ln2

    def log_alpha(m):
        m = np.asarray(m, dtype=np.float64)
        return log_c(m) + (np.maximum(m, 0.0) * ln2 if inter else 0.0)

    def log_beta(m):
        m = np.asarray(m, dtype=np.float64)
        return log_c(m) + m * ln2

    ms = np.arange(lo, hi + 1, dtype=np.float64)
    la, lb = log_alpha(ms), log_beta(ms)
    scales = [int(m) for m in ms]
    qc = conjugate(spec.q)
    if tails and spec.interval != "upper":
        # below the window only the X0 part of J counts
        la = np.concatenate([[_collapse(log_alpha, lo, "left", qc)], la])
        lb = np.concatenate([[-math.inf], lb])
        scales = ["left"] + scales
    if tails and spec.interval != "lower":
        # above it only the X1 part counts (for the intersection couple both are equal there)
        r = _collapse(log_beta, hi, "right", qc)
        la = np.concatenate([la, [r if inter else -math.inf]])
        lb = np.concatenate([lb, [r]])
        scales = scales + ["right"]
    with np.errstate(over="ignore"):
        return Blocks(np.exp(la), np.exp(lb), w0, w1, scales)


def block_costs(blocks, x):
    n0 = x @ blocks.w0
    n1 = x @ blocks.w1
    return np.maximum(blocks.alpha * n0, blocks.beta * n1)


def _lq(c, q):
    if math.isinf(q):
        return float(np.max(c))
    return float(np.sum(c ** q) ** (1.0 / q))


def dual_lower_bound(blocks, absf, g, q, extra=None):
    """<g, |f|> / ||(c_i*(g))||_q': a lower bound for every g (weak duality).

    With ``extra`` (the X0 weights of an additional linear block) the bound is
    valid only when g <= extra coordinatewise; g is clipped to enforce it.
    """
    if extra is not None:
        g = np.minimum(g, extra)
    num = float(g @ absf)
    if num <= 0:
        return 0.0
    cs = kernels.block_dual(np.ascontiguousarray(g), blocks.alpha, blocks.beta, blocks.w0, blocks.w1)
    den = _lq(cs, conjugate(q))
    if extra is not None:
        # the extra block contributes linearly, so the bound is <g,|f|> / max(1, ||c*||_q')
        den = max(den, 1.0)
    return num / den if den > 0 else math.inf


def unit_norms(blocks, q):
    """Discretised J-norm of each unit vector: (sum_i u_ik^-q')^(-1/q')."""
    u = np.maximum(blocks.alpha[:, None] * blocks.w0[None, :], blocks.beta[:, None] * blocks.w1[None, :])
    qc = conjugate(q)
    with np.errstate(divide="ignore"):
        lu = np.log(u)
    if math.isinf(qc):
        return np.exp(np.min(lu, axis=0))
    return np.exp(-logsumexp(-qc * lu, axis=0) / qc)


@dataclass(frozen=True)
class JResult:
    value: float
    lower: float
    gap: float
    x: np.ndarray = field(repr=False)
    extra: np.ndarray = field(repr=False, default=None)


_CP_CACHE = {}
_CP_LOCK = threading.Lock()


def _cvx_problem(q, M, n, extra):
    """Cached parametrised program in the split fractions y (x_ik = |f_k| y_ik)."""
    import cvxpy as cp

    # parameter values are per-problem state, so every thread gets its own copy
    key = (threading.get_ident(), q, M, n, extra)
    with _CP_LOCK:
        if key in _CP_CACHE:
            return _CP_CACHE[key]
        y = cp.Variable((M, n), nonneg=True)
        P0 = cp.Parameter((M, n), nonneg=True)
        P1 = cp.Parameter((M, n), nonneg=True)
        mask = cp.Parameter((M, n), nonneg=True)
        r = cp.Variable(M)
        cons = [r >= cp.sum(cp.multiply(P0, y), axis=1), r >= cp.sum(cp.multiply(P1, y), axis=1),
                y <= mask]
        obj = cp.norm(r, q)
        if extra:
            ye = cp.Variable(n, nonneg=True)
            we = cp.Parameter(n, nonneg=True)
            split = cp.sum(y, axis=0) + ye == 1.0
            obj = obj + we @ ye
            params = (P0, P1, mask, we)
            variables = (y, ye)
        else:
            split = cp.sum(y, axis=0) == 1.0
            params = (P0, P1, mask)
            variables = (y,)
        prob = cp.Problem(cp.Minimize(obj), cons + [split])
        entry = (prob, params, variables, split)
        _CP_CACHE[key] = entry
        return entry


_PRUNE = 1e-7
_SOLVER_CHAIN = (
    ("CLARABEL", dict(tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, tol_ktratio=1e-9, max_iter=400)),
    ("CLARABEL", dict(tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9, max_iter=400)),
    ("SCS", dict(eps_abs=1e-10, eps_rel=1e-10, max_iters=200000)),
)


def _quiet_solve(prob, start=0):
    # accuracy is judged by the certificate, not by the solver's own warning
    import cvxpy as cp

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        # tight tolerances can stall on badly scaled data; the certificate decides
        # whether a looser answer is good enough
        last = None
        for solver, opts in _SOLVER_CHAIN[start:]:
            try:
                prob.solve(solver=solver, **opts)
                return
            except cp.error.SolverError as exc:
                last = exc
        raise last


def _scaled_cells(blocks, absf, q, extra_w=None):
    """Per-cell costs of moving all of f_k into block i, scaled for a solver.

    Returns (P0, P1, keep, sp, extra) with costs divided by a value estimate
    sp.  A cell whose unit cost exceeds a feasible value by 1/_PRUNE can carry
    at most a _PRUNE fraction at the optimum; such cells are masked out
    (zeroed in P and False in keep), except each coordinate's cheapest cell.
    """
    n = absf.size
    P0 = blocks.alpha[:, None] * (blocks.w0 * absf)[None, :]
    P1 = blocks.beta[:, None] * (blocks.w1 * absf)[None, :]
    est = unit_norms(blocks, q) * absf
    if extra_w is not None:
        est = np.minimum(est, extra_w * absf)
    sp = float(np.max(est))
    total = float(np.sum(est))
    P = np.maximum(P0, P1)
    keep = P * _PRUNE <= total
    keep[np.argmin(P, axis=0), np.arange(n)] = True
    extra = None
    if extra_w is not None:
        extra = np.minimum(extra_w * absf, total / _PRUNE) / sp
    return np.where(keep, P0, 0.0) / sp, np.where(keep, P1, 0.0) / sp, keep, sp, extra


def _solve_conic(blocks, absf, q, extra_w=None, start=0):
    import cvxpy as cp

    M, n = blocks.alpha.size, absf.size
    prob, params, variables, split = _cvx_problem(float(q), M, n, extra_w is not None)
    P0, P1, keep, sp, cap = _scaled_cells(blocks, absf, q, extra_w)
    params[0].value = P0
    params[1].value = P1
    params[2].value = keep.astype(np.float64)
    if extra_w is not None:
        params[3].value = cap
    try:
        _quiet_solve(prob, start)
    except cp.error.SolverError as exc:
        raise NormAccuracyError(f"conic solver failed: {exc}") from exc
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NormAccuracyError(f"conic solver status {prob.status}")
    x = np.maximum(variables[0].value, 0.0) * absf[None, :]
    xe = np.maximum(variables[1].value, 0.0) * absf if extra_w is not None else None
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(absf > 0, np.asarray(split.dual_value, dtype=np.float64) * sp / absf, 0.0)
    return x, xe, g


def _block_vertices(A0, A1, g=None):
    """Vertices of {y >= 0: A0.y <= 1, A1.y <= 1}: single coordinates and the
    two-coordinate points where both constraints are tight.

    With ``g`` only the vertex maximising g.y is returned (one row).
    """
    n = A0.size
    with np.errstate(divide="ignore"):
        single = 1.0 / np.maximum(A0, A1)
    rows = [np.diag(single)]
    if n > 1 and np.any(A0 > 0) and np.any(A1 > 0):
        J, K = np.triu_indices(n, 1)
        det = A0[J] * A1[K] - A0[K] * A1[J]
        with np.errstate(divide="ignore", invalid="ignore"):
            yj = (A1[K] - A0[K]) / det
            yk = (A0[J] - A1[J]) / det
        ok = (np.abs(det) > 1e-300) & (yj >= 0) & (yk >= 0) & np.isfinite(yj) & np.isfinite(yk)
        J, K, yj, yk = J[ok], K[ok], yj[ok], yk[ok]
        P = np.zeros((J.size, n))
        P[np.arange(J.size), J] = yj
        P[np.arange(J.size), K] = yk
        rows.append(P)
    V = np.vstack(rows)
    V = V[np.all(np.isfinite(V), axis=1)]
    if g is not None:
        return V[[int(np.argmax(V @ g))]]
    return V


def _dual_conic(blocks, absf, q, extra_w=None, gap_target=None, upper=None, rounds=40):
    """Independent dual route: maximise <g, |f|> over block-dual feasible g.

    The feasible set is cut out by block vertices, added a few at a time
    (the most violated vertex of every block per round).  Works in the split
    fractions with g_k = gamma_k m_k, where gamma_k is the norm of the k-th
    unit vector, so m lies in [0, 1].  Every round's g is a valid
    certificate; the best one is returned.
    """
    import cvxpy as cp

    M, n = blocks.alpha.size, absf.size
    qc = conjugate(q)
    gamma = unit_norms(blocks, q) * absf
    sp = float(np.max(gamma))
    gs = gamma / sp
    A0 = blocks.alpha[:, None] * (blocks.w0 * absf)[None, :] / sp
    A1 = blocks.beta[:, None] * (blocks.w1 * absf)[None, :] / sp
    full = n <= 12
    cuts = [(_block_vertices(A0[i], A1[i]) if full else _block_vertices(A0[i], A1[i])[:n]) * gs[None, :]
            for i in range(M)]
    cap = None
    if extra_w is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = np.minimum(np.where(gs > 0, extra_w * absf / sp / gs, 1.0), 1.0)
    best_g, best_lb = np.zeros(n), 0.0
    for _ in range(rounds):
        m = cp.Variable(n, nonneg=True)
        t = cp.Variable(M)
        cons = [cuts[i] @ m <= t[i] for i in range(M)] + [cp.norm(t, qc) <= 1.0, m <= 1.0]
        if cap is not None:
            cons.append(m <= cap)
        prob = cp.Problem(cp.Maximize(gs @ m), cons)
        try:
            _quiet_solve(prob)
        except cp.error.SolverError:
            break
        if m.value is None:
            break
        mv = np.clip(m.value, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(absf > 0, mv * gamma / absf, 0.0)
        lb = dual_lower_bound(blocks, absf, g, q, extra_w)
        if lb > best_lb:
            best_g, best_lb = g, lb
        if full or (upper is not None and upper - best_lb <= gap_target * upper):
            break
        added = False
        for i in range(M):
            v = _block_vertices(A0[i], A1[i], gs * mv)
            if float(v @ (gs * mv)) > float(np.max(cuts[i] @ mv)) * (1 + 1e-9) + 1e-15:
                cuts[i] = np.vstack([cuts[i], v * gs[None, :]])
                added = True
        if not added:
            break
    return best_g


def _solve_lp(blocks, absf, q, extra_w=None):
    """q in {1, inf}: variables [y over kept cells, r (M or 1), ye (n)], x = |f| y."""
    from scipy.sparse import coo_matrix

    M, n = blocks.alpha.size, absf.size
    P0, P1, keep, sp, cap = _scaled_cells(blocks, absf, q, extra_w)
    I, K = np.nonzero(keep)
    nc = I.size
    nr = M if q == 1 else 1
    ne = n if extra_w is not None else 0
    nv = nc + nr + ne
    c = np.zeros(nv)
    c[nc:nc + nr] = 1.0
    if ne:
        c[nc + nr:] = cap
    rows, cols, vals, nrow = [], [], [], 0
    for P, coef in ((P0, blocks.alpha), (P1, blocks.beta)):
        for i in np.nonzero(coef)[0]:
            sel = np.nonzero(I == i)[0]
            rows += [nrow] * (sel.size + 1)
            cols += sel.tolist() + [nc + (i if q == 1 else 0)]
            vals += P[I[sel], K[sel]].tolist() + [-1.0]
            nrow += 1
    A_ub = coo_matrix((vals, (rows, cols)), shape=(nrow, nv)).tocsr()
    er = K.tolist() + (list(range(n)) if ne else [])
    ec = list(range(nc)) + (list(range(nc + nr, nv)) if ne else [])
    A_eq = coo_matrix((np.ones(len(er)), (er, ec)), shape=(n, nv)).tocsr()
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(nrow), A_eq=A_eq, b_eq=np.ones(n),
                  bounds=[(0, None)] * nv, method="highs")
    if res.status != 0:
        raise NormAccuracyError(f"LP failed: {res.message}")
    x = np.zeros((M, n))
    x[I, K] = np.maximum(res.x[:nc], 0.0) * absf[K]
    xe = np.maximum(res.x[nc + nr:], 0.0) * absf if ne else None
    g = np.asarray(res.eqlin.marginals, dtype=np.float64) * sp / absf
    return x, xe, g


def _price(blocks, absf, q, x, xe, extra_w):
    """Cheapest of the solver's split and copies with dust removed.

    Interior-point solutions leave ~1e-10 fractions on expensive cells; every
    thresholded copy is renormalised to sum to |f|, so each is feasible.
    """
    best = _price_one(blocks, absf, q, x, xe, extra_w)
    for tol in (1e-12, 1e-10, 1e-8, 1e-6):
        xc = np.where(x > tol * absf[None, :], x, 0.0)
        xec = None if xe is None else np.where(xe > tol * absf, xe, 0.0)
        tot = xc.sum(axis=0) + (xec if xec is not None else 0.0)
        if np.any(tot <= 0):
            continue
        cand = _price_one(blocks, absf, q, xc, xec, extra_w)
        if cand[0] < best[0]:
            best = cand
    return best


def _price_one(blocks, absf, q, x, xe, extra_w):
    """Repair a split so it sums to |f| exactly and return (value, x, xe)."""
    tot = x.sum(axis=0) + (xe if xe is not None else 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        fix = np.where(tot > 0, absf / tot, 0.0)
    x = x * fix[None, :]
    if xe is not None:
        xe = xe * fix
    value = _lq(block_costs(blocks, x), q) + (float(extra_w @ xe) if xe is not None else 0.0)
    return value, x, xe


def solve_j(blocks, absf, q, extra_w=None, gap_tol=1e-4):
    """Exact discretised J-norm with a dual certificate.

    The value is the price of an explicit feasible split; the lower bound
    comes from weak duality, first with the solver's multipliers and, if
    those are not tight enough, from a separately solved dual program.
    """
    if not np.any(absf):
        return JResult(0.0, 0.0, 0.0, np.zeros((blocks.alpha.size, absf.size)))
    support = absf > 0
    if not np.all(support):
        # zero coordinates carry nothing; solving without them keeps the duals clean
        sub = Blocks(blocks.alpha, blocks.beta, blocks.w0[support], blocks.w1[support], blocks.scales)
        r = solve_j(sub, absf[support], q, None if extra_w is None else extra_w[support], gap_tol)
        x = np.zeros((blocks.alpha.size, absf.size))
        x[:, support] = r.x
        xe = None
        if r.extra is not None:
            xe = np.zeros(absf.size)
            xe[support] = r.extra
        return JResult(r.value, r.lower, r.gap, x, xe)
    conic = 1 < q < math.inf
    if conic:
        x, xe, g = _solve_conic(blocks, absf, q, extra_w)
    else:
        x, xe, g = _solve_lp(blocks, absf, q, extra_w)
    upper, x, xe = _price(blocks, absf, q, x, xe, extra_w)
    # the optimal dual lies in [0, ||e_k||] coordinatewise; clipping removes solver noise
    cap = unit_norms(blocks, q)
    lower = max(dual_lower_bound(blocks, absf, np.clip(h, 0.0, cap), q, extra_w) for h in (g, -g))
    if upper - lower > gap_tol * upper:
        gd = _dual_conic(blocks, absf, q, extra_w, gap_tol, upper)
        lower = max(lower, dual_lower_bound(blocks, absf, gd, q, extra_w))
        for start in range(1, len(_SOLVER_CHAIN) if conic else 0):
            if upper - lower <= gap_tol * upper:
                break
            try:
                x2, xe2, _ = _solve_conic(blocks, absf, q, extra_w, start)
            except NormAccuracyError:
                continue
            up2, x2, xe2 = _price(blocks, absf, q, x2, xe2, extra_w)
            if up2 < upper:
                upper, x, xe = up2, x2, xe2
    gap = (upper - lower) / upper if upper > 0 else 0.0
    if gap > gap_tol:
        raise NormAccuracyError(f"J optimisation gap {gap:.2e} exceeds {gap_tol:.0e} "
                                f"(upper {upper:.12g}, lower {lower:.12g})")
    return JResult(upper, lower, gap, x, xe)


def _abs_coords(f):
    return np.abs(np.asarray(_data(f), dtype=np.float64))


def j_norm(spec, f, scheme=None):
    """Discretised J-norm (exact optimum over dyadic representations)."""
    if spec.method != "J":
        raise ValueError("j_norm needs a J spec")
    scheme = scheme or DyadicScheme.for_couple(spec.couple)
    check_window(spec.couple, scheme)
    absf = _abs_coords(f)
    if not np.any(absf):
        return 0.0
    blocks = j_blocks(spec, scheme)
    if np.any(blocks.alpha[:1] == 0) and blocks.scales[0] == "left":
        return 0.0   # collapsed left block costs nothing: the functional vanishes
    return solve_j(blocks, absf, spec.q).value


def j_norm_small_exact(spec, f, scheme=None):
    absf = _abs_coords(f)
    scheme = scheme or DyadicScheme.for_couple(spec.couple)
    if absf.size > 8:
        raise ValueError("j_norm_small_exact is limited to n <= 8")
    if scheme.size > 24:
        raise WindowError("j_norm_small_exact is limited to windows of <= 24 scales")
    return j_norm(spec, f, scheme)


def j_norm_upper(spec, f, scheme=None):
    """Feasible one-hot representation: each coordinate goes to one window scale."""
    scheme = scheme or DyadicScheme.for_couple(spec.couple)
    check_window(spec.couple, scheme)
    absf = _abs_coords(f)
    if not np.any(absf):
        return 0.0
    b = j_blocks(spec, scheme, tails=False)
    return float(kernels.onehot_upper(absf, b.alpha, b.beta, b.w0, b.w1, float(spec.q)))


# ---------------------------------------------------------------------------
# sum and intersection with X0


def _x0_weights(x0):
    if isinstance(x0, DiagonalCouple):
        return x0.w0
    return np.asarray(x0, dtype=np.float64)


def sum_space_norm(f, x0, y_spec, grid=None, scheme=None):
    """inf over f = g + h of ||g||_X0 + ||h||_Y; returns (value, h).

    For a J-space Y the X0 part is one more linear block of the same program.
    For a K-space Y the optimal h is lambda * f with lambda in [0, 1]^n, and
    the K-norm is a weighted l_q norm of the basis matrix applied to |h|.
    """
    w0 = _x0_weights(x0)
    absf = _abs_coords(f)
    sign = np.sign(np.asarray(_data(f), dtype=np.float64))
    if not np.any(absf):
        return 0.0, np.zeros_like(absf)
    if y_spec.method == "J":
        scheme = scheme or DyadicScheme.for_couple(y_spec.couple)
        check_window(y_spec.couple, scheme)
        blocks = j_blocks(y_spec, scheme)
        res = solve_j(blocks, absf, y_spec.q, extra_w=w0)
        h = res.x.sum(axis=0)
        return res.value, sign * h
    if diagonal_weights(y_spec.couple) is None:
        raise ValueError("sum_space_norm with a K-space needs a diagonal couple")
    basis = k_basis(y_spec, grid)
    q = y_spec.q
    if q == 1:
        unit = np.exp(basis.logw) @ basis.phi
        lam = (unit < w0).astype(np.float64)
        h = lam * absf
        return float(w0 @ (absf - h) + unit @ h), sign * h
    import cvxpy as cp

    # rows scaled by the q-th root of their weights; drop rows with no mass
    lw = basis.logw if math.isinf(q) else basis.logw / q
    keep = np.isfinite(lw)
    D = np.exp(lw[keep] - lw[keep].max())
    A = (D[:, None] * basis.phi[keep]) * absf[None, :]
    sa = float(np.max(A))
    scale_y = math.exp(lw[keep].max()) * sa
    c0 = w0 * absf / scale_y
    A = A / sa
    n = absf.size
    if math.isinf(q):
        # min c0.(1 - lam) + z  subject to  A lam <= z: a small LP
        res = linprog(np.concatenate([-c0, [1.0]]), A_ub=np.hstack([A, -np.ones((A.shape[0], 1))]),
                      b_ub=np.zeros(A.shape[0]), bounds=[(0.0, 1.0)] * n + [(0.0, None)], method="highs")
        if res.status != 0:
            raise NormAccuracyError(f"sum-space LP failed: {res.message}")
        lv = np.clip(res.x[:n], 0.0, 1.0)
    else:
        if q == 2 and A.shape[0] > n:
            # ||A lam||_2 = ||R lam||_2 with A = QR, so the cone shrinks to n rows
            A = np.linalg.qr(A, mode="r")
        lam = cp.Variable(n)
        obj = c0 @ (1 - lam) + cp.norm(A @ lam, q)
        prob = cp.Problem(cp.Minimize(obj), [lam >= 0, lam <= 1])
        try:
            _quiet_solve(prob)
        except cp.error.SolverError as exc:
            raise NormAccuracyError(f"sum-space solver failed: {exc}") from exc
        if lam.value is None:
            raise NormAccuracyError(f"sum-space solver status {prob.status}")
        lv = np.clip(lam.value, 0.0, 1.0)
    h = lv * absf
    val = float(w0 @ (absf - h)) + (k_norm(y_spec, h, grid) if np.any(h) else 0.0)
    # the endpoints are always feasible; keep the best of the three
    val_g = float(w0 @ absf)
    val_h = k_norm(y_spec, absf, grid)
    best = min((val, 0), (val_g, 1), (val_h, 2))
    h = [h, np.zeros_like(absf), absf][best[1]]
    return best[0], sign * h


def intersection_space_norm(f, x0, y_norm_value):
    """max(||f||_X0, ||f||_Y) given the already computed Y-norm."""
    w0 = _x0_weights(x0)
    return max(float(w0 @ _abs_coords(f)), float(y_norm_value))


def norm_value(spec, f, grid=None, scheme=None):
    if spec.method == "K":
        return k_norm(spec, f, grid)
    return j_norm(spec, f, scheme)


def x0x1_norms(couple, f):
    """(||f||_{X0+X1}, ||f||_{X0 n X1}) for a couple with a K-functional."""
    d = _data(f)
    s = float(k_values(couple, d, np.array([1.0]))[0])
    return s, max(couple.norm0(d), couple.norm1(d))
