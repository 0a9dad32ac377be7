"""Adaptive quadrature in the logarithmic variable.

Integrals over (0, inf) with respect to dt/t become integrals over the real
line in ``s = log t``.  Slowly varying integrands behave like powers of |s|,
so far from the origin a second logarithmic substitution is applied:

    s = S + expm1(z - S)    for z > S   (mirror image for z < -S)

which turns polynomial tails into exponential ones.  Integrands are always
positive and are passed around as their logarithms, so nothing overflows
for extreme ``t``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

S_CORE = 50.0
Z_FAR = 700.0
CHUNK = 10.0
DIVERGENCE_START = 60.0
RTOL = 1e-11

# Gauss-Kronrod (7, 15) on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[1::2] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


class QuadratureError(ArithmeticError):
    """Raised when an integral neither converges nor is detected as divergent."""


def s_of_z(z):
    z = np.asarray(z, dtype=np.float64)
    out = z.copy()
    hi = z > S_CORE
    lo = z < -S_CORE
    out[hi] = S_CORE + np.expm1(z[hi] - S_CORE)
    out[lo] = -S_CORE - np.expm1(-z[lo] - S_CORE)
    return out


def z_of_s(s):
    s = np.asarray(s, dtype=np.float64)
    out = s.copy()
    hi = s > S_CORE
    lo = s < -S_CORE
    out[hi] = S_CORE + np.log1p(s[hi] - S_CORE)
    out[lo] = -S_CORE - np.log1p(-s[lo] - S_CORE)
    return out


def log_jacobian(z):
    """log ds/dz."""
    z = np.asarray(z, dtype=np.float64)
    return np.maximum(np.abs(z) - S_CORE, 0.0)


def _zscalar(s):
    if s == math.inf:
        return math.inf
    if s == -math.inf:
        return -math.inf
    return float(z_of_s(np.array([s]))[0])


def panel_edges(za, zb, breaks_z=(), core_step=1.0, far_step=0.5):
    """Panel edges covering the finite z-interval [za, zb].

    Integer multiples of ``core_step`` inside the core, a geometric grading
    towards s = 0 (where catalog weights have their only kink) and the
    supplied breakpoints are always edges.
    """
    pts = [za, zb]
    lo_c, hi_c = max(za, -S_CORE), min(zb, S_CORE)
    if lo_c < hi_c:
        k0 = math.ceil(lo_c / core_step)
        k1 = math.floor(hi_c / core_step)
        pts.extend(np.arange(k0, k1 + 1) * core_step)
    if zb > S_CORE:
        a = max(za, S_CORE)
        pts.extend(np.arange(math.ceil(a / far_step), math.floor(zb / far_step) + 1) * far_step)
    if za < -S_CORE:
        b = min(zb, -S_CORE)
        pts.extend(-np.arange(math.ceil(-b / far_step), math.floor(-za / far_step) + 1) * far_step)
    grading = 2.0 ** -np.arange(1, 41)
    pts.extend(grading)
    pts.extend(-grading)
    pts.extend(breaks_z)
    pts = np.unique(np.asarray(pts, dtype=np.float64))
    return pts[(pts >= za) & (pts <= zb)]


def _gk(logf, a, b):
    """Log Kronrod estimate and relative Gauss-Kronrod discrepancy per panel."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    z = mid[:, None] + half[:, None] * _XK[None, :]
    lf = logf(s_of_z(z.ravel())).reshape(z.shape) + log_jacobian(z)
    top = np.max(lf, axis=1)
    fin = np.isfinite(top)
    shift = np.where(fin, top, 0.0)
    e = np.exp(lf - shift[:, None])
    kr = e @ _WK
    ga = e @ _WG
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = shift + np.log(kr) + np.log(half)
        rel = np.abs(kr - ga) / kr
    logk = np.where(fin, logk, top)
    rel = np.where(fin & (kr > 0), rel, 0.0)
    # +inf integrand: panel is infinite; leave rel at 0 so it is not refined
    return logk, rel


def _adaptive_panels(logf, edges, rtol=RTOL, max_depth=48, abort_overflow=True):
    """Accepted panels (a, b, log integral) after bisection refinement.

    With ``abort_overflow`` a panel beyond double range returns ``None``
    (the caller treats the integral as divergent); otherwise such panels are
    accepted as they are.
    """
    a = edges[:-1].copy()
    b = edges[1:].copy()
    acc_a, acc_b, acc_l = [], [], []
    logtot = -math.inf
    for depth in range(max_depth + 1):
        if a.size == 0:
            break
        logk, rel = _gk(logf, a, b)
        huge = logk > 709.0
        if abort_overflow and np.any(huge):
            return None
        cur = _lse(np.concatenate([logk, [logtot]]))
        negligible = logk < cur + math.log(1e-18)
        ok = (rel <= rtol) | negligible | huge | (depth == max_depth) | ((b - a) < 1e-13)
        acc_a.append(a[ok])
        acc_b.append(b[ok])
        acc_l.append(logk[ok])
        logtot = _lse(np.concatenate([logk[ok], [logtot]]))
        m = 0.5 * (a[~ok] + b[~ok])
        a, b = np.concatenate([a[~ok], m]), np.concatenate([m, b[~ok]])
    if not acc_a:
        return np.zeros(0), np.zeros(0), np.zeros(0)
    A, B, L = np.concatenate(acc_a), np.concatenate(acc_b), np.concatenate(acc_l)
    order = np.argsort(A)
    return A[order], B[order], L[order]


def _adaptive(logf, edges, rtol=RTOL, max_depth=48):
    """Log integrals of accepted panels; ``[inf]`` when beyond double range."""
    res = _adaptive_panels(logf, edges, rtol, max_depth)
    if res is None:
        return np.array([math.inf])
    return res[2] if res[2].size else np.array([-math.inf])


def _lse(x):
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or not np.any(x > -math.inf):
        return -math.inf
    if np.any(np.isposinf(x)):
        return math.inf
    return float(logsumexp(x))


def _far(logf, z0, direction, logtot_core, rtol):
    """Integrate from z0 towards +-infinity in chunks; returns log value."""
    pieces = []
    prev = None
    z = z0
    ratio = None
    while abs(z) < S_CORE + Z_FAR:
        z_next = z + direction * CHUNK
        lo, hi = (z, z_next) if direction > 0 else (z_next, z)
        lc = _lse(_adaptive(logf, panel_edges(lo, hi), rtol))
        if lc == math.inf:
            return math.inf
        pieces.append(lc)
        total = _lse(pieces + [logtot_core])
        if prev is not None and prev > -math.inf and lc > -math.inf:
            ratio = math.exp(min(lc - prev, 50.0))
            if abs(z_next) - S_CORE >= DIVERGENCE_START and ratio >= 0.99:
                return math.inf
        if lc < total + math.log(1e-17):
            return _lse(pieces)
        prev = lc
        z = z_next
    if ratio is not None and ratio < 0.9:
        rem = prev + math.log(ratio / (1.0 - ratio))
        return _lse(pieces + [rem])
    raise QuadratureError(
        f"tail integral undecided at z={z:.1f}: chunk ratio {ratio}; neither convergent nor divergent"
    )


def log_integral(logf, s_a=-math.inf, s_b=math.inf, breaks=(), core_step=1.0, rtol=RTOL):
    """log of the integral over (s_a, s_b) of exp(logf(s)) ds.

    ``logf`` maps a 1-D array of s values to log integrand values.  Returns
    +inf when the integral diverges at an infinite endpoint, -inf when the
    integrand vanishes identically.
    """
    if s_b <= s_a:
        return -math.inf
    za, zb = _zscalar(s_a), _zscalar(s_b)
    ca = max(za, -S_CORE) if math.isinf(za) else za
    cb = min(zb, S_CORE) if math.isinf(zb) else zb
    if math.isinf(za) and ca > cb:
        ca = cb - CHUNK
    if math.isinf(zb) and cb < ca:
        cb = ca + CHUNK
    bz = [_zscalar(b) for b in breaks if s_a < b < s_b]
    core = _lse(_adaptive(logf, panel_edges(ca, cb, bz, core_step), rtol))
    if core == math.inf:
        return math.inf
    parts = [core]
    if math.isinf(zb):
        parts.append(_far(logf, cb, +1, core, rtol))
    if math.isinf(za):
        parts.append(_far(logf, ca, -1, _lse(parts), rtol))
    return _lse(parts)


def integral(logf, s_a=-math.inf, s_b=math.inf, breaks=(), core_step=1.0, rtol=RTOL):
    lv = log_integral(logf, s_a, s_b, breaks, core_step, rtol)
    return math.exp(lv) if lv < 709.0 else math.inf


def far_samples(s_a=-math.inf, s_b=math.inf, step=0.5):
    """Sample points covering the z-mapped far field inside (s_a, s_b)."""
    zs = np.arange(-S_CORE - Z_FAR, S_CORE + Z_FAR + step, step)
    s = s_of_z(zs)
    return s[(s > s_a) & (s < s_b)]


def log_sup(logf, s_a=-math.inf, s_b=math.inf, grid_s=None, breaks=()):
    """log of the essential supremum of exp(logf) on (s_a, s_b).

    Sampled on the grid, breakpoints and far-field points, then polished by a
    bounded scalar search around the best sample.  A maximum that keeps
    growing at the outermost far sample is reported as +inf.
    """
    pts = [far_samples(s_a, s_b)]
    if grid_s is not None:
        g = np.asarray(grid_s)
        pts.append(g[(g > s_a) & (g < s_b)])
    pts.append(np.array([b for b in breaks if s_a < b < s_b]))
    for e in (s_a, s_b):
        if math.isfinite(e):
            pts.append(np.array([e]))
    s = np.unique(np.concatenate(pts))
    vals = logf(s)
    if np.any(np.isposinf(vals)):
        return math.inf
    i = int(np.argmax(vals))
    best = float(vals[i])
    if best == -math.inf:
        return best
    core = np.abs(s) <= S_CORE
    core_max = float(np.max(vals[core])) if np.any(core) else -math.inf
    if (i == 0 and math.isinf(s_a)) or (i == s.size - 1 and math.isinf(s_b)):
        if best > core_max + 20.0:
            return math.inf
    lo = s[max(i - 1, 0)]
    hi = s[min(i + 1, s.size - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda x: -float(logf(np.array([x]))[0]), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(lo), abs(hi))},
        )
        best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class FixedRule:
    """A fixed node set (s values, log weights) over (s_a, s_b) for cached reuse."""

    s: np.ndarray
    logw: np.ndarray


def fixed_rule(s_a, s_b, breaks=(), core_step=1.0):
    """Composite Kronrod-15 nodes over the finite interval [s_a, s_b] in z."""
    za, zb = _zscalar(s_a), _zscalar(s_b)
    bz = [_zscalar(b) for b in breaks if s_a < b < s_b]
    e = panel_edges(za, zb, bz, core_step)
    a, b = e[:-1], e[1:]
    half = 0.5 * (b - a)
    z = (0.5 * (a + b))[:, None] + half[:, None] * _XK[None, :]
    lw = np.log(half)[:, None] + np.log(_WK)[None, :] + log_jacobian(z)
    return FixedRule(s_of_z(z.ravel()), lw.ravel())


class CumulativeTable:
    """Running integral (or running supremum) of exp(logf) from one end.

    ``side="inf"`` tabulates log of the integral over (s, inf), ``side="zero"``
    over (-inf, s).  Accepted adaptive panels over the whole mapped range are
    summed once; a query adds an exact Kronrod panel from s to the next edge.
    """

    def __init__(self, logf, side, mode="int", rtol=RTOL):
        if side not in ("inf", "zero"):
            raise ValueError(f"side must be 'inf' or 'zero', got {side!r}")
        self.logf = logf
        self.side = side
        self.mode = mode
        self.rtol = rtol
        self.divergent = False
        self._build()

    def _build(self):
        hi = self.side == "inf"
        if self.mode == "int":
            ends = (0.0, math.inf) if hi else (-math.inf, 0.0)
            if log_integral(self.logf, *ends, rtol=self.rtol) == math.inf:
                self.divergent = True
                return
            zmax = S_CORE + Z_FAR
            res = _adaptive_panels(self.logf, panel_edges(-zmax, zmax), self.rtol, abort_overflow=False)
            A, B, L = res
            self.edges = np.concatenate([A, B[-1:]])
            rem = self._remainder(A, L, hi)
            if hi:
                acc = np.logaddexp.accumulate(np.concatenate([[rem], L[::-1]]))
                self.cum = acc[::-1]
            else:
                self.cum = np.logaddexp.accumulate(np.concatenate([[rem], L]))
        else:
            ends = (0.0, math.inf) if hi else (-math.inf, 0.0)
            if log_sup(self.logf, *ends) == math.inf:
                self.divergent = True
                return
            zmax = S_CORE + Z_FAR
            e = panel_edges(-zmax, zmax)
            a, b = e[:-1], e[1:]
            z = (0.5 * (a + b))[:, None] + (0.5 * (b - a))[:, None] * _XK[None, :]
            inner = self.logf(s_of_z(z.ravel())).reshape(z.shape)
            at_e = self.logf(s_of_z(e))
            pm = np.maximum(np.max(inner, axis=1), np.maximum(at_e[:-1], at_e[1:]))
            self.edges = e
            if hi:
                self.cum = np.concatenate([np.maximum.accumulate(pm[::-1])[::-1], [-math.inf]])
            else:
                self.cum = np.concatenate([[-math.inf], np.maximum.accumulate(pm)])

    @staticmethod
    def _remainder(A, L, hi):
        # geometric extrapolation of the last two CHUNK-wide blocks beyond the table
        zmax = S_CORE + Z_FAR
        zz = A if hi else -A
        far = _lse(L[zz >= zmax - CHUNK])
        prev = _lse(L[(zz >= zmax - 2 * CHUNK) & (zz < zmax - CHUNK)])
        if far == -math.inf or prev == -math.inf:
            return -math.inf
        r = math.exp(min(far - prev, 0.0))
        if r >= 1.0 or r == 0.0:
            return far
        return far + math.log(r / (1.0 - r))

    def log_at(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        if self.divergent:
            return np.full(s.shape, math.inf)
        z = z_of_s(s)
        e = self.edges
        i = np.clip(np.searchsorted(e, z, side="right") - 1, 0, e.size - 2)
        inside = (z >= e[0]) & (z <= e[-1])
        out = np.empty(s.shape)
        hi = self.side == "inf"
        zi = z[inside]
        ii = i[inside]
        if hi:
            pa, pb, rest = zi, e[ii + 1], self.cum[ii + 1]
        else:
            pa, pb, rest = e[ii], zi, self.cum[ii]
        if self.mode == "int":
            with np.errstate(divide="ignore"):
                part, _ = _gk(self.logf, pa, pb)
        else:
            zz = pa[:, None] + (pb - pa)[:, None] * (0.5 * (_XK[None, :] + 1.0))
            part = np.max(self.logf(s_of_z(zz.ravel())).reshape(zz.shape), axis=1)
            part = np.maximum(part, self.logf(s_of_z(zi)))
        out[inside] = np.logaddexp(part, rest) if self.mode == "int" else np.maximum(part, rest)
        for k in np.nonzero(~inside)[0]:
            out[k] = self._outside(float(s[k]), float(z[k]))
        return out

    def _outside(self, s, z):
        e = self.edges
        if self.mode == "sup":
            ends = (s, math.inf) if self.side == "inf" else (-math.inf, s)
            return log_sup(self.logf, *ends)
        if self.side == "inf":
            if z > e[-1]:
                return log_integral(self.logf, s, math.inf, rtol=self.rtol)
            edge_s = float(s_of_z(np.array([e[0]]))[0])
            return _lse([log_integral(self.logf, s, edge_s, rtol=self.rtol), self.cum[0]])
        if z < e[0]:
            return log_integral(self.logf, -math.inf, s, rtol=self.rtol)
        edge_s = float(s_of_z(np.array([e[-1]]))[0])
        return _lse([log_integral(self.logf, edge_s, s, rtol=self.rtol), self.cum[-1]])
