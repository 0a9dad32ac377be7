"""Model couples with exact K- and J-functionals.

DiagonalCouple is a pair of weighted l1 norms on R^n, StepFunctionCouple is
(L1, Linf) restricted to step functions, and DerivedCouple builds
(X0, X0+X1), (X0, X0 n X1) or the swapped couple (X1, X0) from a base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .lp import linprog_dense


class CoupleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DiagonalCouple:
    w0: np.ndarray
    w1: np.ndarray
    tag: str = "diag"

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=np.float64).ravel()
        w1 = np.asarray(self.w1, dtype=np.float64).ravel()
        if w0.size < 1 or w0.shape != w1.shape:
            raise CoupleError("weights must be nonempty and of equal length")
        if not (np.all(w0 > 0) and np.all(w1 > 0) and np.all(np.isfinite(w0)) and np.all(np.isfinite(w1))):
            raise CoupleError("diagonal weights must lie in (0, inf)")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "w1", w1)

    @property
    def n(self):
        return self.w0.size

    def norm0(self, f):
        return float(self.w0 @ np.abs(f))

    def norm1(self, f):
        return float(self.w1 @ np.abs(f))

    def to_dict(self):
        return {"kind": "diagonal", "w0": self.w0.tolist(), "w1": self.w1.tolist()}


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonnegative step function: ``values[i]`` on (breaks[i], breaks[i+1]); breaks[0] = 0."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=np.float64).ravel()
        v = np.abs(np.asarray(self.values, dtype=np.float64).ravel())
        if b.size != v.size + 1 or b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise CoupleError("step breaks must start at 0, increase strictly and bound every piece")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @property
    def lengths(self):
        return np.diff(self.breaks)

    def scaled(self, c):
        return StepFunction(self.breaks, abs(c) * self.values)

    def truncated(self, n_pieces):
        """Keep the first pieces, zero the rest."""
        v = self.values.copy()
        v[n_pieces:] = 0.0
        return StepFunction(self.breaks, v)

    def minus(self, other):
        if not np.array_equal(self.breaks, other.breaks):
            raise CoupleError("step functions must share breakpoints")
        return StepFunction(self.breaks, np.abs(self.values - other.values))


@dataclass(frozen=True)
class StepFunctionCouple:
    tag: str = "step"

    def norm0(self, f):
        with np.errstate(invalid="ignore"):
            return float(np.sum(f.values * f.lengths)) if np.all((f.values == 0) | np.isfinite(f.lengths)) else math.inf

    def norm1(self, f):
        return float(np.max(f.values)) if f.values.size else 0.0

    def to_dict(self):
        return {"kind": "step"}


DERIVATIONS = ("sum", "intersection", "swap")


@dataclass(frozen=True, eq=False)
class DerivedCouple:
    base: object
    derivation: str

    def __post_init__(self):
        if self.derivation not in DERIVATIONS:
            raise CoupleError(f"derivation must be one of {DERIVATIONS}")

    @property
    def tag(self):
        return f"{self.derivation}({self.base.tag})"

    def norm0(self, f):
        if self.derivation == "swap":
            return self.base.norm1(f)
        return self.base.norm0(f)

    def norm1(self, f):
        if self.derivation == "swap":
            return self.base.norm0(f)
        if self.derivation == "sum":
            return k_functional(self.base, f, 1.0)
        return max(self.base.norm0(f), self.base.norm1(f))

    def to_dict(self):
        return {"kind": "derived", "derivation": self.derivation, "base": self.base.to_dict()}


@dataclass(frozen=True, eq=False)
class CoupleElement:
    """An element together with the tag of the couple it was drawn for."""

    data: object
    couple_tag: str = ""

    def to_dict(self):
        if isinstance(self.data, StepFunction):
            return {"breaks": self.data.breaks.tolist(), "values": self.data.values.tolist()}
        return {"coords": np.asarray(self.data, dtype=np.float64).tolist()}


def _data(f):
    return f.data if isinstance(f, CoupleElement) else f


def diagonal_weights(couple):
    """(w0, w1) when the couple's K-functional is that of a diagonal couple, else None.

    (X0, X0+X1) of a diagonal couple is itself diagonal with second weight min(w0, w1);
    the swapped couple exchanges the weights.
    """
    if isinstance(couple, DiagonalCouple):
        return couple.w0, couple.w1
    if isinstance(couple, DerivedCouple) and isinstance(couple.base, DiagonalCouple):
        if couple.derivation == "sum":
            return couple.base.w0, np.minimum(couple.base.w0, couple.base.w1)
        if couple.derivation == "swap":
            return couple.base.w1, couple.base.w0
    return None


# ---------------------------------------------------------------------------
# K-functional


def _step_k(f, t):
    order = np.argsort(-f.values, kind="stable")
    v = f.values[order]
    ln = f.lengths[order]
    cum = np.concatenate([[0.0], np.cumsum(ln)])
    mass = np.concatenate([[0.0], np.cumsum(np.where(v > 0, v * ln, 0.0))])
    t = np.atleast_1d(t)
    i = np.searchsorted(cum, t, side="right") - 1
    i = np.minimum(i, v.size)
    vi = np.append(v, 0.0)[i]
    return mass[i] + vi * (t - cum[i])


def k_values(couple, f, t):
    """K(f, t) for an array of t."""
    f = _data(f)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0):
        raise CoupleError("t must be positive")
    if isinstance(couple, DiagonalCouple):
        a = np.abs(f)
        return np.minimum(couple.w0[None, :], t.reshape(-1, 1) * couple.w1[None, :]) @ a
    if isinstance(couple, StepFunctionCouple):
        return _step_k(f, t.ravel())
    if isinstance(couple, DerivedCouple):
        if couple.derivation == "sum":
            return k_sum_couple(couple.base, f, t.ravel())
        if couple.derivation == "swap":
            t = t.ravel()
            return t * k_values(couple.base, f, 1.0 / t)
        if isinstance(couple.base, DiagonalCouple):
            b = couple.base
            return kernels.intersection_k(np.ascontiguousarray(t.ravel()), np.abs(f), b.w0, b.w1)
        raise CoupleError("exact intersection K is implemented for diagonal bases only")
    raise CoupleError(f"unknown couple {couple!r}")


def k_functional(couple, f, t):
    if not t > 0:
        raise CoupleError("t must be positive")
    return float(k_values(couple, f, np.array([t]))[0])


def log_k(couple, f, s):
    """log K(f, e^s) evaluated without overflow for extreme s."""
    f = _data(f)
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    w = diagonal_weights(couple)
    if w is not None:
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(f))
        return kernels.diag_logk(np.ascontiguousarray(s), la, np.log(w[0]), np.log(w[1]))
    if isinstance(couple, DerivedCouple) and couple.derivation == "swap":
        return s + log_k(couple.base, f, -s)
    if isinstance(couple, DerivedCouple) and couple.derivation == "sum":
        return np.minimum(s, 0.0) + log_k(couple.base, f, np.maximum(s, 0.0))
    # step and intersection couples: K is linear in t below e^-700, so extend it exactly there
    with np.errstate(divide="ignore"):
        out = np.log(k_values(couple, f, np.exp(np.clip(s, -700.0, 700.0))))
    return out + np.minimum(s + 700.0, 0.0)


def k_sum_couple(base, f, t):
    """K(f, t; X0, X0+X1) = min(1, t) K(f, max(1, t); X0, X1)."""
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    tt = np.atleast_1d(t)
    out = np.minimum(1.0, tt) * k_values(base, _data(f), np.maximum(1.0, tt))
    return float(out[0]) if scalar else out


def k_intersection_approx(base, f, t):
    """t ||f||_X0 + K(f, t; X0, X1), equivalent to K on (X0, X0 n X1) within a factor 2."""
    if not 0 < t < 1:
        raise CoupleError("the surrogate is stated for t in (0, 1)")
    return t * base.norm0(_data(f)) + k_functional(base, f, t)


def k_ordered_plateau(base, f, t):
    """K(f, t) for X1 embedded in X0 with constant k: equal to ||f||_X0 once t >= k."""
    f = _data(f)
    if not isinstance(base, DiagonalCouple):
        raise CoupleError("plateau check needs a diagonal base (a couple with X1 embedded in X0)")
    k = float(np.max(base.w0 / base.w1))
    n0 = base.norm0(f)
    if t >= k:
        return n0
    val = k_functional(base, f, t)
    if t >= 1 and not (n0 / k * (1 - 1e-12) <= val <= n0 * (1 + 1e-12)):
        raise ArithmeticError(f"plateau bound violated: K={val}, ||f||_0={n0}, k={k}")
    return val


def embedding_constant(base):
    return float(np.max(base.w0 / base.w1))


# ---------------------------------------------------------------------------
# LP oracle


def k_oracle_opt(base, f, t, derivation="none"):
    """K(f, t) on (X0, Y) by linear programming, Y = X1, X0+X1 or X0 n X1 of a diagonal base.

    Variables (all >= 0): the second component g = gp - gm, an upper bound
    u >= |f - g| per coordinate, and for the derived norms the extra
    variables that linearise them.
    """
    f = np.asarray(_data(f), dtype=np.float64)
    if not isinstance(base, DiagonalCouple) or base.n > 8:
        raise CoupleError("LP oracle needs a diagonal base with n <= 8")
    w0, w1 = base.w0, base.w1
    n = base.n
    Z = np.zeros((n, n))
    I = np.eye(n)
    if derivation == "none":
        # x = [gp, gm, u]
        c = np.concatenate([t * w1, t * w1, w0])
        A = np.block([[-I, I, -I], [I, -I, -I]])
        b = np.concatenate([-f, f])
    elif derivation == "intersection":
        # x = [gp, gm, u, r] with r >= ||g||_0 and r >= ||g||_1
        c = np.concatenate([np.zeros(2 * n), w0, [t]])
        A = np.vstack([
            np.hstack([-I, I, -I, np.zeros((n, 1))]),
            np.hstack([I, -I, -I, np.zeros((n, 1))]),
            np.concatenate([w0, w0, np.zeros(n), [-1.0]])[None, :],
            np.concatenate([w1, w1, np.zeros(n), [-1.0]])[None, :],
        ])
        b = np.concatenate([-f, f, [0.0, 0.0]])
    elif derivation == "sum":
        # x = [gp, gm, u, hp, hm, v]: g = h + (g - h), ||g||_{X0+X1} <= ||h||_0 + ||g - h||_1
        c = np.concatenate([np.zeros(2 * n), w0, t * w0, t * w0, t * w1])
        A = np.block([
            [-I, I, -I, Z, Z, Z],
            [I, -I, -I, Z, Z, Z],
            [I, -I, Z, -I, I, -I],
            [-I, I, Z, I, -I, -I],
        ])
        b = np.concatenate([-f, f, np.zeros(n), np.zeros(n)])
    else:
        raise CoupleError(f"unknown derivation {derivation!r}")
    res = linprog_dense(c, A_ub=A, b_ub=b)
    if res.status != "optimal":
        raise ArithmeticError(f"LP oracle failed: {res.status}")
    return res.fun


# ---------------------------------------------------------------------------
# J-functional


def j_functional(couple, f, t):
    if not t > 0:
        raise CoupleError("t must be positive")
    f = _data(f)
    n0, n1 = couple.norm0(f), couple.norm1(f)
    if not (math.isfinite(n0) and math.isfinite(n1)):
        raise CoupleError("J needs an element of the intersection")
    return max(n0, t * n1)


def j_intersection_couple(base, f, t):
    """J(f, t; X0, X0 n X1) = max(1, t) J(f, min(1, t); X0, X1)."""
    return max(1.0, t) * j_functional(base, f, min(1.0, t))


def couple_from_dict(d):
    kind = d.get("kind")
    if kind == "diagonal":
        return DiagonalCouple(np.array(d["w0"]), np.array(d["w1"]))
    if kind == "step":
        return StepFunctionCouple()
    if kind == "derived":
        return DerivedCouple(couple_from_dict(d["base"]), d["derivation"])
    raise CoupleError(f"unknown couple kind {kind!r}")
