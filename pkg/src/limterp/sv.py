"""Slowly varying weights on (0, inf) as immutable expression trees.

Every node evaluates in the log domain: ``logval(s)`` returns log w(e^s) for
an array of ``s = log t``, and ``dlog(s)`` returns d log w / ds, the
logarithmic derivative t w'(t) / w(t).  Catalog functions only have kinks at
t = 1; there the right derivative is reported.

Nodes serialise to a prefix notation, e.g. ``broken(one,pow(ell,-2))``.
"""

from __future__ import annotations

import math
import re
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import quadrature as quad
from .kernels import envelope_gap


class SvDomainError(ValueError):
    """Evaluation outside (0, inf) or an invalid node parameter."""


def _fmt(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _as_s(s):
    return np.atleast_1d(np.asarray(s, dtype=np.float64))


def _numeric_dlog(node, s):
    # second-order one-sided stencil for s >= 0 keeps the right-derivative convention at the kink
    s = _as_s(s)
    h = 1e-5 * np.maximum(1.0, np.abs(s))
    out = (node.logval(s + h) - node.logval(s - h)) / (2 * h)
    near = (s >= 0) & (s < h)
    if np.any(near):
        sn, hn = s[near], h[near]
        out[near] = (-3 * node.logval(sn) + 4 * node.logval(sn + hn) - node.logval(sn + 2 * hn)) / (2 * hn)
    return out


class SvExpr:
    """Base class for weight nodes."""

    def logval(self, s):
        raise NotImplementedError

    def dlog(self, s):
        return _numeric_dlog(self, s)

    def to_str(self):
        raise NotImplementedError

    @property
    def differentiable(self):
        """True when the node is absolutely continuous with a usable derivative."""
        return True

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0) or np.any(np.isnan(t)):
            raise SvDomainError("weights are evaluated on (0, inf) only")
        with np.errstate(over="ignore"):
            out = np.exp(self.logval(np.log(np.atleast_1d(t))))
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def __str__(self):
        return self.to_str()

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        return Mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, r):
        return Pow(self, float(r))


@dataclass(frozen=True)
class Const(SvExpr):
    c: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise SvDomainError(f"constant must be positive and finite, got {self.c}")

    def logval(self, s):
        return np.full(_as_s(s).shape, math.log(self.c))

    def dlog(self, s):
        return np.zeros(_as_s(s).shape)

    def to_str(self):
        return "one" if self.c == 1.0 else f"const({_fmt(self.c)})"


@dataclass(frozen=True)
class Ell(SvExpr):
    """1 + |log t|."""

    def logval(self, s):
        return np.log1p(np.abs(_as_s(s)))

    def dlog(self, s):
        s = _as_s(s)
        return np.where(s >= 0, 1.0, -1.0) / (1.0 + np.abs(s))

    def to_str(self):
        return "ell"


@dataclass(frozen=True)
class ExpLogPow(SvExpr):
    """exp(sigma |log t|^kappa) with 0 < kappa < 1."""

    sigma: float
    kappa: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise SvDomainError(f"exp_logpow needs kappa in (0, 1), got {self.kappa}")
        if not math.isfinite(self.sigma):
            raise SvDomainError("exp_logpow needs a finite sigma")

    def logval(self, s):
        return self.sigma * np.abs(_as_s(s)) ** self.kappa

    def dlog(self, s):
        s = _as_s(s)
        a = np.abs(s)
        with np.errstate(divide="ignore"):
            d = self.sigma * self.kappa * a ** (self.kappa - 1.0)
        d = np.where(a > 0, d, math.copysign(math.inf, self.sigma) if self.sigma else 0.0)
        return np.where(s >= 0, d, -d)

    @property
    def differentiable(self):
        # derivative blows up at t = 1 but the function is absolutely continuous
        return True

    def to_str(self):
        return f"exp_logpow({_fmt(self.sigma)},{_fmt(self.kappa)})"


@dataclass(frozen=True)
class Mul(SvExpr):
    left: SvExpr
    right: SvExpr

    def logval(self, s):
        return self.left.logval(s) + self.right.logval(s)

    def dlog(self, s):
        return self.left.dlog(s) + self.right.dlog(s)

    @property
    def differentiable(self):
        return self.left.differentiable and self.right.differentiable

    def to_str(self):
        return f"mul({self.left.to_str()},{self.right.to_str()})"


@dataclass(frozen=True)
class Pow(SvExpr):
    base: SvExpr
    r: float

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise SvDomainError("power must be finite")

    def logval(self, s):
        if self.r == 0:
            return np.zeros(_as_s(s).shape)
        return self.r * self.base.logval(s)

    def dlog(self, s):
        if self.r == 0:
            return np.zeros(_as_s(s).shape)
        return self.r * self.base.dlog(s)

    @property
    def differentiable(self):
        return self.base.differentiable

    def to_str(self):
        return f"pow({self.base.to_str()},{_fmt(self.r)})"


@dataclass(frozen=True)
class Recip(SvExpr):
    """t -> base(1/t)."""

    base: SvExpr

    def logval(self, s):
        return self.base.logval(-_as_s(s))

    def dlog(self, s):
        return -self.base.dlog(-_as_s(s))

    @property
    def differentiable(self):
        return self.base.differentiable

    def to_str(self):
        return f"recip({self.base.to_str()})"


@dataclass(frozen=True)
class Broken(SvExpr):
    """``left`` on (0, 1), ``right`` on [1, inf)."""

    left: SvExpr
    right: SvExpr

    def logval(self, s):
        s = _as_s(s)
        out = np.empty(s.shape)
        neg = s < 0
        if np.any(neg):
            out[neg] = self.left.logval(s[neg])
        if np.any(~neg):
            out[~neg] = self.right.logval(s[~neg])
        return out

    def dlog(self, s):
        s = _as_s(s)
        out = np.empty(s.shape)
        neg = s < 0
        if np.any(neg):
            out[neg] = self.left.dlog(s[neg])
        if np.any(~neg):
            out[~neg] = self.right.dlog(s[~neg])
        return out

    @property
    def continuous(self):
        lo = float(self.left.logval(np.array([-1e-12]))[0])
        hi = float(self.right.logval(np.array([0.0]))[0])
        return abs(lo - hi) <= 1e-9

    @property
    def differentiable(self):
        return self.continuous and self.left.differentiable and self.right.differentiable

    def to_str(self):
        return f"broken({self.left.to_str()},{self.right.to_str()})"


@dataclass(frozen=True)
class Tail(SvExpr):
    """Tail norm of a weight against dt/t.

    ``side="zero"``:  (integral over (0, t) of base^q dtau/tau)^(1/q)
    ``side="inf"``:   (integral over (t, inf) of base^q dtau/tau)^(1/q)
    For q = inf the essential supremum over the same range.
    """

    base: SvExpr
    side: str
    q: float
    _table: list = field(default_factory=list, compare=False, repr=False, hash=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.side not in ("zero", "inf"):
            raise SvDomainError(f"side must be 'zero' or 'inf', got {self.side!r}")
        if not self.q >= 1.0:
            raise SvDomainError(f"q must be in [1, inf], got {self.q}")

    def table(self):
        if not self._table:
            with self._lock:
                if not self._table:
                    if math.isinf(self.q):
                        t = quad.CumulativeTable(self.base.logval, self.side, mode="sup")
                    else:
                        q = self.q
                        t = quad.CumulativeTable(lambda s: q * self.base.logval(s), self.side)
                    self._table.append(t)
        return self._table[0]

    @property
    def divergent(self):
        return self.table().divergent

    def logval(self, s):
        lv = self.table().log_at(s)
        return lv if math.isinf(self.q) else lv / self.q

    def dlog(self, s):
        if math.isinf(self.q):
            return _numeric_dlog(self, s)
        s = _as_s(s)
        q = self.q
        with np.errstate(invalid="ignore"):
            ratio = np.exp(q * self.base.logval(s) - q * self.logval(s)) / q
        return -ratio if self.side == "inf" else ratio

    @property
    def differentiable(self):
        return not math.isinf(self.q)

    def to_str(self):
        name = "tailinf" if self.side == "inf" else "tail0"
        return f"{name}({self.base.to_str()},{_fmt(self.q)})"


@dataclass(frozen=True)
class Bar(SvExpr):
    """Average t^{-1} * integral over (0, t) of base(tau) dtau."""

    base: SvExpr
    span: float = 80.0
    step: float = 1.0

    def logval(self, s):
        s = _as_s(s)
        out = np.empty(s.shape)
        for lo in range(0, s.size, 256):
            out[lo:lo + 256] = self._chunk(s[lo:lo + 256])
        return out

    def _chunk(self, s):
        # u = log(tau / t) over [-span, 0]; the weight e^u makes the cut negligible.
        # Each row gets unit panels plus a geometric grading around the kink u = -s.
        std = np.arange(-self.span, 0.5, self.step)
        grade = np.concatenate([[0.0], 2.0 ** -np.arange(1, 25), -(2.0 ** -np.arange(1, 25))])
        extra = np.clip(-s[:, None] + grade[None, :], -self.span, 0.0)
        edges = np.sort(np.concatenate([np.broadcast_to(std, (s.size, std.size)), extra], axis=1), axis=1)
        a, b = edges[:, :-1], edges[:, 1:]
        half = 0.5 * (b - a)
        u = (0.5 * (a + b))[:, :, None] + half[:, :, None] * quad._XK[None, None, :]
        lb = self.base.logval(s)
        vals = self.base.logval((s[:, None, None] + u).ravel()).reshape(u.shape) - lb[:, None, None] + u
        with np.errstate(divide="ignore"):
            lw = np.log(half)[:, :, None] + np.log(quad._WK)[None, None, :]
        terms = (vals + lw).reshape(s.size, -1)
        return lb + logsumexp(terms, axis=1)

    def dlog(self, s):
        s = _as_s(s)
        return np.exp(self.base.logval(s) - self.logval(s)) - 1.0

    def to_str(self):
        return f"bar({self.base.to_str()})"


@dataclass(frozen=True)
class DerivA(SvExpr):
    """b / (-t b'(t) / b(t)) = b^2 / (t (-b')), the derivative form of the a-from-b transform."""

    base: SvExpr

    def logval(self, s):
        d = -self.base.dlog(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d > 0, self.base.logval(s) - np.log(np.where(d > 0, d, 1.0)), math.inf)

    def to_str(self):
        return f"dab({self.base.to_str()})"


@dataclass(frozen=True)
class DerivB(SvExpr):
    """-t a'(t), the derivative form of the b-from-a transform."""

    base: SvExpr

    def logval(self, s):
        d = -self.base.dlog(s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(d > 0, self.base.logval(s) + np.log(np.where(d > 0, d, 1.0)), -math.inf)

    def to_str(self):
        return f"dba({self.base.to_str()})"


ONE = Const(1.0)
ELL = Ell()


def ell_pow(r):
    return Pow(ELL, float(r))


# ---------------------------------------------------------------------------
# prefix notation parser

_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z_0-9]*)|([-+]?(?:inf|\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?))|([(),]))")


def _tokens(text):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SvDomainError(f"cannot parse weight expression at {text[pos:]!r}")
        name, num, punct = m.groups()
        if num is not None and (name is None):
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("num", math.inf) if name == "inf" else ("name", name))
        else:
            out.append(("p", punct))
        pos = m.end()
    return out


_ARITY = {
    "const": "n", "pow": "en", "mul": "ee", "broken": "ee", "exp_logpow": "nn",
    "recip": "e", "tail0": "en", "tailinf": "en", "bar": "e", "dab": "e", "dba": "e",
}


def parse(text):
    """Parse the prefix notation produced by ``to_str``."""
    toks = _tokens(text)
    pos = 0

    def expect(p):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != ("p", p):
            raise SvDomainError(f"expected {p!r} in {text!r}")
        pos += 1

    def number():
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] != "num":
            raise SvDomainError(f"expected a number in {text!r}")
        pos += 1
        return toks[pos - 1][1]

    def expr():
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] != "name":
            raise SvDomainError(f"expected a node name in {text!r}")
        name = toks[pos][1]
        pos += 1
        if name == "one":
            return ONE
        if name == "ell":
            return ELL
        if name not in _ARITY:
            raise SvDomainError(f"unknown node {name!r}")
        expect("(")
        args = []
        for i, kind in enumerate(_ARITY[name]):
            if i:
                expect(",")
            args.append(expr() if kind == "e" else number())
        expect(")")
        if name == "const":
            return Const(args[0])
        if name == "pow":
            return Pow(args[0], args[1])
        if name == "mul":
            return Mul(args[0], args[1])
        if name == "broken":
            return Broken(args[0], args[1])
        if name == "exp_logpow":
            return ExpLogPow(args[0], args[1])
        if name == "recip":
            return Recip(args[0])
        if name == "tail0":
            return Tail(args[0], "zero", args[1])
        if name == "tailinf":
            return Tail(args[0], "inf", args[1])
        if name == "bar":
            return Bar(args[0])
        if name == "dab":
            return DerivA(args[0])
        return DerivB(args[0])

    node = expr()
    if pos != len(toks):
        raise SvDomainError(f"trailing input in {text!r}")
    return node


# ---------------------------------------------------------------------------
# grids and checks


@dataclass(frozen=True)
class LogGrid:
    t_min: float = 1e-20
    t_max: float = 1e20
    ppd: int = 32

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max < math.inf):
            raise SvDomainError("grid needs 0 < t_min < t_max < inf")
        if int(self.ppd) != self.ppd or self.ppd < 8:
            raise SvDomainError("points per decade must be an integer >= 8")

    @property
    def decades(self):
        return math.log10(self.t_max) - math.log10(self.t_min)

    @property
    def s(self):
        n = int(round(self.decades * self.ppd)) + 1
        return np.linspace(math.log(self.t_min), math.log(self.t_max), n)

    @property
    def t(self):
        return np.exp(self.s)

    def refined(self):
        return LogGrid(self.t_min, self.t_max, self.ppd * 2)

    @classmethod
    def centered(cls, decades=40, ppd=32):
        half = 10.0 ** (decades / 2)
        return cls(1.0 / half, half, ppd)


def eval_sv(expr, t):
    if not t > 0:
        raise SvDomainError(f"t must be positive, got {t}")
    return expr(t)


@dataclass(frozen=True)
class MembershipReport:
    passed: bool
    worst_factor: float
    worst_up: float
    worst_down: float


def check_sv_membership(expr, eps, grid=None, bound=10.0):
    """Envelope test: t^eps w(t) against its running max, t^-eps w(t) against its running min."""
    if not eps > 0:
        raise SvDomainError("eps must be positive")
    grid = grid or LogGrid.centered()
    if grid.decades < 10 - 1e-9:
        raise SvDomainError("membership grid must span at least 10 decades")
    s = grid.s
    lw = expr.logval(s)
    if not np.all(np.isfinite(lw)):
        return MembershipReport(False, math.inf, math.inf, math.inf)
    up = math.exp(envelope_gap(np.ascontiguousarray(eps * s + lw)))
    down = math.exp(envelope_gap(np.ascontiguousarray(-(-eps * s + lw))))
    worst = max(up, down)
    return MembershipReport(worst <= bound, worst, up, down)


def eval_tail(expr, side, q, t):
    """(side='zero') or (side='inf') tail norm at t; math.inf when it diverges."""
    if not t > 0:
        raise SvDomainError(f"t must be positive, got {t}")
    side = {"infinity": "inf", "0": "zero"}.get(side, side)
    return Tail(expr, side, float(q))(t)


def smooth_bar(expr):
    return Bar(expr)


# ---------------------------------------------------------------------------
# quasi-monotonicity consequences


def scaling_ratio_bounds(expr, kappa, eps, grid):
    """Empirical constants c, C with c min(k^-e, k^e) w(t) <= w(k t) <= C max(k^e, k^-e) w(t)."""
    s = grid.s
    r = expr.logval(s + math.log(kappa)) - expr.logval(s)
    lo = -eps * abs(math.log(kappa))
    return math.exp(float(np.min(r)) - lo), math.exp(float(np.max(r)) + lo)


def head_power_ratio(expr, alpha, q, grid):
    """Norm of tau^(alpha - 1/q) w(tau) over (0, t) divided by t^alpha w(t), on the grid."""
    s = grid.s
    if math.isinf(q):
        table = quad.CumulativeTable(lambda x: alpha * x + expr.logval(x), "zero", mode="sup")
        lh = table.log_at(s)
    else:
        table = quad.CumulativeTable(lambda x: q * (alpha * x + expr.logval(x)), "zero")
        lh = table.log_at(s) / q
    return np.exp(lh - alpha * s - expr.logval(s))


def tail_domination_ratio(expr, side, q, grid):
    """w(t) / B(t) on the grid, B the tail norm on the given side."""
    s = grid.s
    return np.exp(expr.logval(s) - Tail(expr, side, float(q)).logval(s))


# ---------------------------------------------------------------------------
# property suite over the catalog

CATALOG = (
    "one",
    "ell",
    "pow(ell,-1)",
    "pow(ell,-2)",
    "pow(ell,0.5)",
    "broken(one,pow(ell,-1))",
    "broken(ell,one)",
    "broken(ell,pow(ell,-1))",
    "recip(broken(one,pow(ell,-2)))",
    "exp_logpow(1,0.5)",
    "exp_logpow(-1,0.5)",
    "mul(ell,exp_logpow(-1,0.5))",
)


@dataclass(frozen=True)
class SuiteCheck:
    name: str
    passed: bool
    value: float
    refined: float


def _stable(a, b, tol):
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(b / a - 1.0) <= tol


def _spread(r):
    r = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        return math.inf
    return float(max(np.max(r), 1.0 / np.min(r)))


def property_suite(expr, ppd=32, tol=0.05, eps=0.5, bound=10.0):
    """Membership plus the quasi-monotonicity consequences, each at ppd and 2 ppd.

    A check passes when its constant is finite and moves by at most ``tol``
    under refinement; divergence proxies compare the ratio at 10^-30 with
    10^-3 (and 10^30 with 10^3).
    """
    g = LogGrid(1e-10, 1e10, ppd)
    gr = g.refined()
    out = []

    mem = check_sv_membership(expr, eps, LogGrid.centered(40, ppd), bound)
    out.append(SuiteCheck("membership", mem.passed, mem.worst_factor, mem.worst_factor))

    for kappa in (1.0 / 3.0, 3.0):
        c, C = scaling_ratio_bounds(expr, kappa, 0.5, g)
        c2, C2 = scaling_ratio_bounds(expr, kappa, 0.5, gr)
        ok = _stable(c, c2, tol) and _stable(C, C2, tol)
        out.append(SuiteCheck(f"scaling kappa={kappa:.4g}", ok, max(C, 1.0 / c), max(C2, 1.0 / c2)))

    for alpha in (0.5, 1.0):
        for q in (1.0, 2.0, math.inf):
            a = _spread(head_power_ratio(expr, alpha, q, g))
            b = _spread(head_power_ratio(expr, alpha, q, gr))
            out.append(SuiteCheck(f"head power alpha={alpha:g} q={_fmt(q)}", _stable(a, b, tol), a, b))

    for side in ("zero", "inf"):
        for q in (1.0, 2.0):
            tail = Tail(expr, side, q)
            if not np.isfinite(tail.logval(np.array([0.0]))[0]):
                continue
            a = float(np.max(tail_domination_ratio(expr, side, q, g)))
            b = float(np.max(tail_domination_ratio(expr, side, q, gr)))
            out.append(SuiteCheck(f"tail domination {side} q={q:g}", _stable(a, b, tol), a, b))
            tm = check_sv_membership(tail, eps, LogGrid.centered(40, ppd), bound)
            out.append(SuiteCheck(f"tail membership {side} q={q:g}", tm.passed, tm.worst_factor, tm.worst_factor))

    for side in ("zero", "inf"):
        tail = Tail(expr, side, 2.0)
        for end, (far, near) in (("0+", (-30.0, -3.0)), ("inf", (30.0, 3.0))):
            s = np.array([far, near]) * math.log(10.0)
            r = tail.logval(s) - expr.logval(s)
            ok = bool(r[0] > r[1]) or not math.isfinite(r[0])
            out.append(SuiteCheck(f"divergence proxy {side}-tail t->{end}", ok, float(r[0]), float(r[1])))

    bar = Bar(expr)
    a = _spread(bar(g.t) / expr(g.t))
    b = _spread(bar(gr.t) / expr(gr.t))
    out.append(SuiteCheck("smoothing", _stable(a, b, tol), a, b))
    return out
