"""Weight transformations between K-side and J-side weights.

All outputs are expression nodes, so transformed weights nest freely inside
norm quadrature.  Preconditions are checked numerically with the divergence
detector before anything is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as quad
from .sv import (
    ELL, ONE, Broken, Const, DerivA, DerivB, LogGrid, Mul, Pow, SvExpr, Tail, check_sv_membership,
)


class PreconditionError(ValueError):
    """A weight fails the hypothesis a construction needs; ``condition`` names it."""

    def __init__(self, message, condition=""):
        super().__init__(message)
        self.condition = condition


def conjugate(q):
    if q == 1:
        return math.inf
    if math.isinf(q):
        return 1.0
    return q / (q - 1.0)


def _log_integral_power(w, p, lo, hi):
    """log of the integral of w^p dt/t over (e^lo, e^hi)."""
    return quad.log_integral(lambda s: p * w.logval(s), lo, hi, breaks=(0.0,))


def diverges_at_zero(w, p):
    return _log_integral_power(w, p, -math.inf, 0.0) == math.inf


def diverges_at_inf(w, p):
    return _log_integral_power(w, p, 0.0, math.inf) == math.inf


def limit_kind(w, end):
    """Classify lim w at t -> 0 (end='zero') or t -> inf (end='inf') as 'inf', 'zero' or 'finite'.

    Compares log w at |log t| = 1e100 and 1e300; a log power moves by
    rho * 460 between them, a convergent weight barely moves.
    """
    sign = -1.0 if end == "zero" else 1.0
    v = w.logval(np.array([sign * 1e100, sign * 1e300]))
    if not np.all(np.isfinite(v)):
        return "inf" if v[-1] > 0 else "zero"
    d = v[1] - v[0]
    if d > 1.0:
        return "inf"
    if d < -1.0:
        return "zero"
    return "finite"


def strictly_decreasing(w, grid=None):
    grid = grid or LogGrid.centered()
    far = quad.far_samples(step=2.0)
    # beyond |log t| ~ 1e12 the derivative of a log power underflows to zero
    s = np.concatenate([grid.s, far[np.abs(far) <= 1e12]])
    d = w.dlog(s)
    return bool(np.all(d < 0))


def _require(ok, message, condition):
    if not ok:
        raise PreconditionError(message, condition)


# ---------------------------------------------------------------------------
# integral regime


def a_from_b(b: SvExpr, q: float) -> SvExpr:
    """a(x) = b(x)^(-q/q') * integral over (x, inf) of b^q dt/t."""
    _require(1 <= q < math.inf, f"a_from_b needs 1 <= q < inf, got {q}", "q-range")
    _require(not diverges_at_inf(b, q),
             "integral of t^-1 b^q over (x, inf) diverges", "finite tail of b^q")
    _require(diverges_at_zero(b, q),
             "integral of t^-1 b^q over (0, inf) is finite; use the sum-couple pipeline (extend_zero)",
             "divergent total of b^q")
    tail_q = Pow(Tail(b, "inf", float(q)), float(q))
    if q == 1:
        return Tail(b, "inf", 1.0)
    return Mul(Pow(b, -(q - 1.0)), tail_q)


def b_from_a(a: SvExpr, q: float) -> SvExpr:
    """b(x) = a(x)^(-q'/q) * (integral over (0, x) of a^-q' dt/t)^-1."""
    _require(1 < q <= math.inf, f"b_from_a needs 1 < q <= inf, got {q}", "q-range")
    qc = conjugate(q)
    inv = Pow(a, -1.0)
    _require(not diverges_at_zero(inv, qc),
             "integral of t^-1 a^-q' over (0, x) diverges", "finite head of a^-q'")
    _require(diverges_at_inf(inv, qc),
             "integral of t^-1 a^-q' over (0, inf) is finite; use the intersection-couple pipeline (extend_inf)",
             "divergent total of a^-q'")
    head = Pow(Tail(inv, "zero", qc), -qc)
    if math.isinf(q):
        return head
    return Mul(Pow(a, -1.0 / (q - 1.0)), head)


# ---------------------------------------------------------------------------
# derivative regime


def _check_decreasing_ac(w, name, at_zero, at_inf, condition):
    _require(w.differentiable, f"{name} must be absolutely continuous with a derivative", condition)
    _require(strictly_decreasing(w), f"{name} must be strictly decreasing", condition)
    z, i = limit_kind(w, "zero"), limit_kind(w, "inf")
    _require(at_zero(z), f"{name}(0+) has the wrong limit ({z})", condition)
    _require(at_inf(i), f"{name}(inf) has the wrong limit ({i})", condition)


def a_from_b_deriv(b: SvExpr, b_at_zero="inf") -> SvExpr:
    """a(x) = b(x)^2 / (x (-b'(x))).

    ``b_at_zero="inf"`` is the classical hypothesis b(0) = inf; ``"finite"``
    accepts the extended weight of the sum-couple variant, where the caller
    has already glued a divergent branch on (0, 1).
    """
    want = (lambda k: k == "inf") if b_at_zero == "inf" else (lambda k: True)
    _check_decreasing_ac(b, "b", want, lambda k: k == "zero", "b decreasing from inf to 0")
    return DerivA(b)


def b_from_a_deriv(a: SvExpr, a_at_inf="zero") -> SvExpr:
    """b(x) = -x a'(x); ``a_at_inf="positive"`` for the intersection-couple variant."""
    want = (lambda k: k == "zero") if a_at_inf == "zero" else (lambda k: True)
    _check_decreasing_ac(a, "a", lambda k: k == "inf", want, "a decreasing from inf to 0")
    return DerivB(a)


# ---------------------------------------------------------------------------
# extensions


def default_beta(q, regime="integral"):
    """Extension weight on (0, 1): finite tail at infinity, divergent at zero."""
    if regime == "derivative":
        return Broken(ELL, Pow(ELL, -1.0))
    return Broken(ONE, Pow(ELL, -2.0 / q))


def default_alpha(q, regime="integral"):
    """Extension weight on (1, inf): finite head at zero, reciprocal divergent at infinity."""
    if regime == "derivative":
        return Broken(ELL, Pow(ELL, -1.0))
    return Broken(Pow(ELL, 2.0 / conjugate(q)), ONE)


def _scale(w, c):
    return w if c == 1.0 else Mul(Const(c), w)


def extend_weight_at_zero(b, beta=None, q=1.0, continuity="none", regime="integral"):
    """B = b on [1, inf), c * beta on (0, 1)."""
    beta = beta if beta is not None else default_beta(q, regime)
    if regime == "integral":
        _require(1 <= q < math.inf, f"integral regime needs 1 <= q < inf, got {q}", "q-range")
        _require(diverges_at_zero(beta, q),
                 "integral of t^-1 beta^q over (0, 1) must diverge", "beta divergent at 0")
        _require(not diverges_at_inf(b, q),
                 "integral of t^-1 b^q over (1, inf) must be finite", "finite tail of b^q")
    else:
        _check_decreasing_ac(beta, "beta", lambda k: k == "inf", lambda k: k == "zero", "beta decreasing from inf to 0")
        _check_decreasing_ac(b, "b", lambda k: k == "finite", lambda k: k == "zero", "b decreasing from a finite b(0)")
        continuity = "match_constant"
    c = 1.0
    if continuity == "match_constant":
        c = float(math.exp(b.logval(np.array([0.0]))[0] - beta.logval(np.array([0.0]))[0]))
    return Broken(_scale(beta, c), b)


def extend_weight_at_infinity(a, alpha=None, q=math.inf, continuity="none", regime="integral"):
    """A = a on (0, 1], c * alpha on (1, inf)."""
    alpha = alpha if alpha is not None else default_alpha(q, regime)
    if regime == "integral":
        _require(1 < q <= math.inf, f"integral regime needs 1 < q <= inf, got {q}", "q-range")
        qc = conjugate(q)
        _require(diverges_at_inf(Pow(alpha, -1.0), qc),
                 "integral of t^-1 alpha^-q' over (1, inf) must diverge", "1/alpha divergent at inf")
        _require(not diverges_at_zero(Pow(a, -1.0), qc),
                 "integral of t^-1 a^-q' over (0, 1) must be finite", "finite head of a^-q'")
    else:
        _check_decreasing_ac(alpha, "alpha", lambda k: k == "inf", lambda k: k == "zero", "alpha decreasing from inf to 0")
        _check_decreasing_ac(a, "a", lambda k: k == "inf", lambda k: k == "finite", "a decreasing to a positive a(inf)")
        continuity = "match_constant"
    c = 1.0
    if continuity == "match_constant":
        c = float(math.exp(a.logval(np.array([0.0]))[0] - alpha.logval(np.array([0.0]))[0]))
    # the glue point t = 1 belongs to the a-branch; Broken puts it on the right,
    # which is harmless because the two branches agree there up to the constant
    return Broken(a, _scale(alpha, c))


# ---------------------------------------------------------------------------
# the exact duality identity


@dataclass(frozen=True)
class IdentityReport:
    q: float
    kind: str
    constant: float
    xs: tuple
    values: tuple
    max_rel_error: float
    rel_std: float
    passed: bool


def identity_constant(q, kind):
    if kind == "a_from_b":
        qc = conjugate(q)
        return (1.0 / (qc - 1.0)) ** (1.0 / qc)
    return (1.0 / (q - 1.0)) ** (1.0 / q)


def check_product_identity(a, b, q, xs, kind="a_from_b", rtol=1e-6):
    """Product of the a-head and b-tail norms; constant in x for a dual pair.

    ``kind`` says which transform produced the pair and selects the constant.
    """
    if not 1 < q < math.inf:
        raise PreconditionError(f"identity needs 1 < q < inf, got {q}", "q-range")
    qc = conjugate(q)
    head = Tail(Pow(a, -1.0), "zero", qc)
    tail = Tail(b, "inf", float(q))
    s = np.log(np.asarray(xs, dtype=np.float64))
    vals = np.exp(head.logval(s) + tail.logval(s))
    const = identity_constant(q, kind)
    rel = np.abs(vals / const - 1.0)
    rel_std = float(np.std(vals, ddof=1) / np.mean(vals)) if vals.size > 1 else 0.0
    return IdentityReport(float(q), kind, const, tuple(float(x) for x in xs), tuple(vals.tolist()),
                          float(np.max(rel)), rel_std, bool(np.max(rel) <= rtol))


@dataclass(frozen=True)
class TransformSpec:
    q: float
    direction: str
    regime: str
    source: SvExpr

    def __post_init__(self):
        if self.direction not in ("a_from_b", "b_from_a"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.regime == "derivative":
            ok = (self.direction, self.q) in (("a_from_b", math.inf), ("b_from_a", 1.0))
            if not ok:
                raise PreconditionError("derivative regime exists for a_from_b at q=inf and b_from_a at q=1",
                                        "q-range")
        elif self.regime == "integral":
            ok = self.q < math.inf if self.direction == "a_from_b" else self.q > 1
            if not ok or self.q < 1:
                raise PreconditionError(f"integral {self.direction} not defined at q={self.q}", "q-range")
        else:
            raise ValueError(f"unknown regime {self.regime!r}")

    def build(self):
        if self.regime == "derivative":
            return a_from_b_deriv(self.source) if self.direction == "a_from_b" else b_from_a_deriv(self.source)
        return a_from_b(self.source, self.q) if self.direction == "a_from_b" else b_from_a(self.source, self.q)


STAGES = {
    "a_from_b": lambda w, q, extra=None: a_from_b(w, q),
    "b_from_a": lambda w, q, extra=None: b_from_a(w, q),
    "a_from_b_deriv": lambda w, q, extra=None: a_from_b_deriv(w),
    "b_from_a_deriv": lambda w, q, extra=None: b_from_a_deriv(w),
    "extend_zero": lambda w, q, extra=None: extend_weight_at_zero(w, extra, q),
    "extend_inf": lambda w, q, extra=None: extend_weight_at_infinity(w, extra, q),
}


def transformed_is_sv(w, eps=0.1, grid=None, bound=10.0):
    return check_sv_membership(w, eps, grid, bound)
