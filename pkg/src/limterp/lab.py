"""Equivalence harnesses: build weight pipelines, sample elements, compare norms.

Every equivalence id binds a q-range, a default base weight and a list of
norm terms; the first term is the left-hand side and every other term is
compared against it.  Density ids truncate a fixed element and track the
error in the id's norm.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import transforms as tr
from .couples import DerivedCouple, DiagonalCouple, StepFunction, StepFunctionCouple
from .norms import (
    NormSpec, check_admissible_J, check_admissible_K, intersection_space_norm, norm_value,
    sum_space_norm, x0x1_norms, INTERMEDIATE,
)
from .sv import LogGrid, SvExpr, parse
from .transforms import PreconditionError, conjugate

EQUIVALENCE_IDS = ("T1_1", "T1_3", "T1_5", "T1_7", "T1_10", "T1_13", "T1_17", "T1_20")
COROLLARY_IDS = ("C1_12", "C1_16", "C1_19", "C1_22")
DENSITY_IDS = ("D1_2", "D1_4", "D1_8", "D1_11", "D1_14", "D1_21")
RESTRICTED_IDS = ("R1_11", "R1_15", "R1_18", "R1_21", "T3_8")
THEOREM_IDS = EQUIVALENCE_IDS + COROLLARY_IDS + DENSITY_IDS

INF = math.inf

# id -> (q-range text, membership test)
Q_RANGES = {
    "T1_1": ("1<=q<inf", lambda q: 1 <= q < INF),
    "T1_3": ("1<q<=inf", lambda q: 1 < q <= INF),
    "T1_5": ("q=inf", lambda q: q == INF),
    "T1_7": ("q=1", lambda q: q == 1),
    "T1_10": ("1<=q<inf", lambda q: 1 <= q < INF),
    "T1_13": ("1<q<=inf", lambda q: 1 < q <= INF),
    "T1_17": ("q=inf", lambda q: q == INF),
    "T1_20": ("q=1", lambda q: q == 1),
    "D1_2": ("1<=q<inf", lambda q: 1 <= q < INF),
    "D1_4": ("1<q<inf", lambda q: 1 < q < INF),
    "D1_8": ("q=1", lambda q: q == 1),
    "D1_11": ("1<=q<inf", lambda q: 1 <= q < INF),
    "D1_14": ("1<q<inf", lambda q: 1 < q < INF),
    "D1_21": ("q=1", lambda q: q == 1),
}
# corollaries and restricted runs share the range of the theorem they rest on
PARENT = {"C1_12": "T1_10", "C1_16": "T1_13", "C1_19": "T1_17", "C1_22": "T1_20",
          "R1_11": "T1_10", "R1_15": "T1_13", "R1_18": "T1_17", "R1_21": "T1_20", "T3_8": "T1_10"}

SUMMARY = {
    "T1_1": "K(b) = J(a), a from b by the tail integral",
    "T1_3": "J(a) = K(b), b from a by the head integral",
    "T1_5": "K(b) = J(a) at q=inf, a = b^2 / (x (-b'))",
    "T1_7": "J(a) = K(b) at q=1, b = -x a'",
    "T1_10": "K(b) = K(B) on (X0, X0+X1) = J(A) on (X0, X0+X1), finite total integral of b^q",
    "T1_13": "J(a) = J(A) on (X0, X0 n X1) = K(B) on (X0, X0 n X1), finite head of a^-q'",
    "T1_17": "q=inf, b(0) finite: K(b) = K(B) = J(A) on (X0, X0+X1)",
    "T1_20": "q=1, a(inf) positive: J(a) = J(A) = K(B) on (X0, X0 n X1)",
    "C1_12": "K(b) = X0 + K(B) = X0 + J(A)",
    "C1_16": "J(a) = X0 n J(A) = X0 n K(B)",
    "C1_19": "q=inf: K(b) = X0 + K(B) = X0 + J(A)",
    "C1_22": "q=1: J(a) = X0 n J(A) = X0 n K(B)",
    "D1_2": "X0 n X1 dense in K(b)",
    "D1_4": "X0 n X1 dense in J(a)",
    "D1_8": "X0 n X1 dense in J(a), q=1",
    "D1_11": "X0 dense in K(b), finite total integral of b^q",
    "D1_14": "X0 n X1 dense in J(a), finite head of a^-q'",
    "D1_21": "X0 n X1 dense in J(a), q=1, a(inf) positive",
    "R1_11": "K(b) over (0,inf) vs over (1,inf), finite total integral",
    "R1_15": "J(a) over (0,inf) vs over (0,1), finite head",
    "R1_18": "K(b) over (0,inf) vs over (1,inf), q=inf",
    "R1_21": "J(a) over (0,inf) vs over (0,1), q=1",
    "T3_8": "K(v) over (0,inf) vs over (1,inf) when t^(-1/q) v is q-integrable",
}

SAMPLER_NOTE = ("heuristic sampler: one-hot and geometric elements plus coordinates log-uniform "
                "over 12 decades with random signs; it does not search for extremal elements")


def theorem_table():
    """Plain-text table of every id, its q-range and what it compares."""
    rows = []
    for tid in THEOREM_IDS + RESTRICTED_IDS:
        qr = Q_RANGES[PARENT.get(tid, tid)][0] if tid != "T3_8" else "1<=q<inf"
        rows.append(f"  {tid:<6} {qr:<9} {SUMMARY[tid]}")
    return "\n".join(rows)


def _fmt_q(q):
    return "inf" if math.isinf(q) else f"{q:g}"


def check_q(tid, q):
    if tid == "T3_8":
        ok, text = 1 <= q < INF, "1<=q<inf"
    else:
        text, test = Q_RANGES[PARENT.get(tid, tid)]
        ok = test(q)
    if not ok:
        raise PreconditionError(f"{tid} needs {text}, got q={_fmt_q(q)}", "q-range")


# ---------------------------------------------------------------------------
# default weights


def default_weight(tid, q):
    """Base weight string for an id at a given q."""
    tid = PARENT.get(tid, tid)
    if tid in ("T1_1", "D1_2"):
        return f"broken(one, pow(ell, {-2.0 / q:.17g}))"
    if tid in ("T1_3", "D1_4"):
        return f"broken(pow(ell, {2.0 / conjugate(q):.17g}), one)"
    if tid in ("T1_5", "T1_7", "D1_8"):
        return "broken(ell, pow(ell, -1))"
    if tid == "T1_10":
        return f"pow(ell, {-2.0 / q:.17g})"
    if tid == "D1_11":
        return f"pow(ell, {-3.0 / q:.17g})"
    if tid in ("T1_13", "D1_14"):
        return f"pow(ell, {2.0 / conjugate(q):.17g})"
    if tid == "T1_17":
        return "tailinf(pow(ell, -1), 2)"
    if tid in ("T1_20", "D1_21"):
        return "pow(tail0(pow(ell, -1), 2), -2)"
    raise KeyError(tid)


def default_restricted_weight(rid, q):
    if rid == "T3_8":
        return f"broken(pow(ell, {-1.5 / q:.17g}), pow(ell, {-3.0 / q:.17g}))"
    return default_weight(rid, q)


def base_couple(n=8, span=6.0):
    """Diagonal couple with w0 = 1 and w1 log-spaced over 2^-span .. 2^span."""
    return DiagonalCouple(np.ones(n), 2.0 ** np.linspace(-span, span, n))


def _as_expr(w):
    return parse(w) if isinstance(w, str) else w


# ---------------------------------------------------------------------------
# norm terms


@dataclass(frozen=True, eq=False)
class Term:
    """One norm in a comparison: a plain space norm, X0 + Y or X0 n Y."""

    label: str
    spec: NormSpec
    kind: str = "space"
    x0: object = None

    def evaluate(self, f, grid=None):
        if self.kind == "space":
            return norm_value(self.spec, f, grid)
        if self.kind == "sum":
            return sum_space_norm(f, self.x0, self.spec, grid)[0]
        return intersection_space_norm(f, self.x0, norm_value(self.spec, f, grid))

    def describe(self):
        d = self.spec.to_dict()
        d["label"], d["kind"] = self.label, self.kind
        return d


@dataclass(frozen=True, eq=False)
class Pipeline:
    theorem: str
    q: float
    couple: object
    weights: dict
    terms: tuple


def build_pipeline(tid, q, weight=None, couple=None):
    """Transformed weights and the norm terms an id compares."""
    check_q(tid, q)
    couple = couple or base_couple()
    w = _as_expr(weight if weight is not None else default_weight(tid, q))
    parent = PARENT.get(tid, tid)

    def K(v, c=couple, label=""):
        return Term(label, NormSpec(q, v, "K", c))

    def J(v, c=couple, label=""):
        return Term(label, NormSpec(q, v, "J", c))

    summ = DerivedCouple(couple, "sum")
    inter = DerivedCouple(couple, "intersection")
    if parent == "T1_1":
        a = tr.a_from_b(w, q)
        return Pipeline(tid, q, couple, {"b": w, "a": a}, (K(w, label="K[b]"), J(a, label="J[a]")))
    if parent == "T1_3":
        b = tr.b_from_a(w, q)
        return Pipeline(tid, q, couple, {"a": w, "b": b}, (J(w, label="J[a]"), K(b, label="K[b]")))
    if parent == "T1_5":
        a = tr.a_from_b_deriv(w)
        return Pipeline(tid, q, couple, {"b": w, "a": a}, (K(w, label="K[b]"), J(a, label="J[a]")))
    if parent == "T1_7":
        b = tr.b_from_a_deriv(w)
        return Pipeline(tid, q, couple, {"a": w, "b": b}, (J(w, label="J[a]"), K(b, label="K[b]")))
    if parent in ("T1_10", "T1_17"):
        if parent == "T1_10":
            B = tr.extend_weight_at_zero(w, None, q)
            A = tr.a_from_b(B, q)
        else:
            B = tr.extend_weight_at_zero(w, None, q, regime="derivative")
            A = tr.a_from_b_deriv(B)
        weights = {"b": w, "B": B, "A": A}
        if tid.startswith("C"):
            terms = (K(w, label="K[b]"),
                     Term("X0+K[B]", NormSpec(q, B, "K", couple), "sum", couple),
                     Term("X0+J[A]", NormSpec(q, A, "J", couple), "sum", couple))
        else:
            terms = (K(w, label="K[b]"), K(B, summ, "K[B;sum]"), J(A, summ, "J[A;sum]"))
        return Pipeline(tid, q, couple, weights, terms)
    if parent in ("T1_13", "T1_20"):
        if parent == "T1_13":
            A = tr.extend_weight_at_infinity(w, None, q)
            B = tr.b_from_a(A, q)
        else:
            A = tr.extend_weight_at_infinity(w, None, q, regime="derivative")
            B = tr.b_from_a_deriv(A)
        weights = {"a": w, "A": A, "B": B}
        if tid.startswith("C"):
            terms = (J(w, label="J[a]"),
                     Term("X0nJ[A]", NormSpec(q, A, "J", couple), "intersection", couple),
                     Term("X0nK[B]", NormSpec(q, B, "K", couple), "intersection", couple))
        else:
            terms = (J(w, label="J[a]"), J(A, inter, "J[A;inter]"), K(B, inter, "K[B;inter]"))
        return Pipeline(tid, q, couple, weights, terms)
    raise KeyError(f"no pipeline for {tid}")


def _check_rhs_admissible(pipeline):
    for t in pipeline.terms:
        check = check_admissible_K if t.spec.method == "K" else check_admissible_J
        verdict = check(t.spec)
        if verdict != INTERMEDIATE:
            raise PreconditionError(f"{t.label}: weight {t.spec.weight} gives a {verdict} space", verdict)


# ---------------------------------------------------------------------------
# sampling


def sample_element(n, index, seed=0):
    """Deterministic element number ``index``: (kind, coordinates).

    The first n are one-hot, the next two geometric (decaying each way), the
    rest have |f_k| log-uniform over 12 decades with random signs.
    """
    if index < n:
        f = np.zeros(n)
        f[index] = 1.0
        return "one_hot", f
    k = np.arange(n)
    if index == n:
        return "geometric", 10.0 ** (-12.0 * k / max(n - 1, 1))
    if index == n + 1:
        return "geometric", 10.0 ** (-12.0 * (n - 1 - k) / max(n - 1, 1))
    rng = np.random.default_rng([int(seed), int(index)])
    mags = 10.0 ** rng.uniform(-6.0, 6.0, n)
    signs = rng.choice([-1.0, 1.0], n)
    return "random", signs * mags


class SampleError(RuntimeError):
    pass


def _threads():
    try:
        return max(1, int(os.environ.get("LIMTERP_THREADS", "1")))
    except ValueError:
        return 1


def _evaluate_all(terms, elements, grid):
    def one(i):
        f = elements[i]
        try:
            return [t.evaluate(f, grid) for t in terms]
        except Exception as exc:
            raise SampleError(f"sample {i}: {type(exc).__name__}: {exc}") from exc

    idx = range(len(elements))
    nt = _threads()
    if nt == 1:
        return [one(i) for i in idx]
    # results come back in submission order, so the report does not depend on scheduling
    with ThreadPoolExecutor(nt) as pool:
        return list(pool.map(one, idx))


# ---------------------------------------------------------------------------
# reports


@dataclass
class RatioReport:
    theorem: str
    q: float
    weights: dict
    terms: list
    samples: list
    min_ratio: float
    max_ratio: float
    geomean_ratio: float
    spreads: dict
    bound: float
    ppd: int
    seed: int
    stability: dict = field(default_factory=dict)
    stable: bool = True
    passed: bool = False
    note: str = SAMPLER_NOTE
    kind: str = "equivalence"

    @property
    def spread(self):
        return max(self.spreads.values()) if self.spreads else 1.0

    def to_dict(self):
        return {
            "kind": self.kind, "theorem": self.theorem, "q": _fmt_q(self.q), "weights": self.weights,
            "terms": self.terms, "samples": self.samples, "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio, "geomean_ratio": self.geomean_ratio, "spreads": self.spreads,
            "bound": self.bound, "ppd": self.ppd, "seed": self.seed, "stability": self.stability,
            "stable": self.stable, "pass": self.passed, "note": self.note,
        }

    def csv_rows(self):
        return [(self.theorem, _fmt_q(self.q), s["index"], s["lhs"], s["rhs"], s["ratio"]) for s in self.samples]


def _ratio_report(tid, q, pipeline_weights, terms, values, kinds, bound, ppd, seed, kind, fixed=None):
    values = np.asarray(values, dtype=np.float64)
    samples = []
    for i, (row, k) in enumerate(zip(values, kinds)):
        lhs, rhs = float(row[0]), float(row[-1])
        samples.append({"index": i, "kind": k, "values": [float(v) for v in row],
                        "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else math.inf})
    ratios = values[:, :1] / values[:, 1:]
    spreads = {}
    for j, t in enumerate(terms[1:]):
        r = ratios[:, j]
        ok = np.all(np.isfinite(r)) and np.all(r > 0)
        spreads[f"{terms[0]['label']}/{t['label']}"] = float(np.max(r) / np.min(r)) if ok else math.inf
    main = ratios[:, -1]
    ok = bool(np.all(np.isfinite(main)) and np.all(main > 0))
    rep = RatioReport(
        theorem=tid, q=q, weights={k: v.to_str() for k, v in pipeline_weights.items()}, terms=terms,
        samples=samples, min_ratio=float(np.min(main)), max_ratio=float(np.max(main)),
        geomean_ratio=float(np.exp(np.mean(np.log(main)))) if ok else math.nan, spreads=spreads,
        bound=bound, ppd=ppd, seed=seed, kind=kind)
    rep.passed = ok and rep.spread <= bound and (fixed is None or fixed(main))
    return rep


def _stability(base, doubled, refined):
    """Relative change of every spread under sample doubling and grid refinement."""
    out = {}
    for name, other in (("samples", doubled), ("grid", refined)):
        ch = 0.0
        for key, v in base.spreads.items():
            w = other.spreads[key]
            ch = max(ch, abs(w / v - 1.0) if math.isfinite(v) and math.isfinite(w) else math.inf)
        out[f"{name}_change"] = ch
    out["samples_spread"] = doubled.spread
    out["grid_spread"] = refined.spread
    return out


def _run_terms(tid, q, weights, terms, n, samples, seed, ppd, bound, kind, fixed=None, decades=40):
    elements, kinds = [], []
    for i in range(samples):
        k, f = sample_element(n, i, seed)
        elements.append(f)
        kinds.append(k)
    grid = LogGrid.centered(decades, ppd)
    values = _evaluate_all(terms, elements, grid)
    return _ratio_report(tid, q, weights, [t.describe() for t in terms], values, kinds, bound, ppd, seed,
                         kind, fixed)


def _with_stability(run, samples, ppd):
    """Run at (samples, ppd), (2 samples, ppd) and (samples, 2 ppd); attach the changes."""
    doubled = run(2 * samples, ppd)
    # the first half of the doubled run is exactly the base run
    base = run(samples, ppd, prefix=doubled)
    refined = run(samples, 2 * ppd)
    base.stability = _stability(base, doubled, refined)
    base.stable = base.stability["samples_change"] < 0.1 and base.stability["grid_change"] < 0.1
    base.passed = base.passed and base.stable and doubled.passed and refined.passed
    return base


def _runner(tid, q, weights, terms, n, seed, bound, kind, fixed=None, decades=40):
    def run(count, ppd, prefix=None):
        if prefix is not None and prefix.ppd == ppd:
            values = [s["values"] for s in prefix.samples[:count]]
            kinds = [s["kind"] for s in prefix.samples[:count]]
            return _ratio_report(tid, q, weights, [t.describe() for t in terms], values, kinds, bound, ppd,
                                 seed, kind, fixed)
        return _run_terms(tid, q, weights, terms, n, count, seed, ppd, bound, kind, fixed, decades)
    return run


def run_equivalence(tid, q, weight=None, couple=None, samples=50, seed=0, ppd=32, bound=100.0,
                    check_stability=True, decades=40):
    """Equivalence or corollary run; the report passes when every spread is within ``bound``."""
    if tid not in EQUIVALENCE_IDS + COROLLARY_IDS:
        raise KeyError(f"{tid} is not an equivalence or corollary id")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    p = build_pipeline(tid, q, weight, couple)
    _check_rhs_admissible(p)
    kind = "corollary" if tid in COROLLARY_IDS else "equivalence"
    run = _runner(tid, q, p.weights, p.terms, p.couple.n, seed, bound, kind, decades=decades)
    if not check_stability:
        return run(samples, ppd)
    return _with_stability(run, samples, ppd)


def run_corollary(tid, q, **kw):
    if tid not in COROLLARY_IDS:
        raise KeyError(f"{tid} is not a corollary id")
    return run_equivalence(tid, q, **kw)


def run_restricted(rid, q, weight=None, couple=None, samples=50, seed=0, ppd=32, bound=100.0,
                   check_stability=True, decades=40):
    """Full-interval norm against its restriction; ratios are oriented to be >= 1."""
    if rid not in RESTRICTED_IDS:
        raise KeyError(f"{rid} is not a restricted-interval id")
    check_q(rid, q)
    couple = couple or base_couple()
    w = _as_expr(weight if weight is not None else default_restricted_weight(rid, q))
    method = "J" if rid in ("R1_15", "R1_21") else "K"
    full = NormSpec(q, w, method, couple)
    if method == "K":
        # the K-integrand is nonnegative, so dropping (0,1) can only shrink the norm
        terms = (Term("K[full]", full), Term("K[(1,inf)]", full.with_(interval="upper")))
    else:
        # fewer admissible representations can only raise the infimum
        terms = (Term("J[(0,1)]", full.with_(interval="lower")), Term("J[full]", full))
    for t in terms:
        check = check_admissible_K if method == "K" else check_admissible_J
        if check(t.spec) != INTERMEDIATE:
            raise PreconditionError(f"{rid}: weight {w} is not admissible", "admissibility")

    def at_least_one(r):
        return bool(np.all(r >= 1.0 - 1e-7))

    run = _runner(rid, q, {"v": w}, terms, couple.n, seed, bound, "restricted", at_least_one, decades)
    if not check_stability:
        return run(samples, ppd)
    return _with_stability(run, samples, ppd)


# ---------------------------------------------------------------------------
# density


@dataclass
class DensityReport:
    theorem: str
    q: float
    weight: str
    couple: str
    truncations: list
    errors: list
    element_norm: float
    relative_final: float
    monotone: bool
    passed: bool
    observational: bool = False

    def to_dict(self):
        return {
            "kind": "density", "theorem": self.theorem, "q": _fmt_q(self.q), "weight": self.weight,
            "couple": self.couple, "truncations": self.truncations, "errors": self.errors,
            "element_norm": self.element_norm, "relative_final": self.relative_final,
            "monotone": self.monotone, "pass": self.passed, "observational": self.observational,
        }

    def csv_rows(self):
        return [(self.theorem, _fmt_q(self.q), n, e, self.element_norm,
                 e / self.element_norm if self.element_norm > 0 else math.nan)
                for n, e in zip(self.truncations, self.errors)]


def diagonal_tail_family(n=72, ratio=0.8, shift=24):
    """Coordinates m = 0..n-1 with w0 = 1, w1 = 2^(m - shift), and f_m = ratio^m.

    ||f_N||_X1 grows like (2 ratio)^N, so the element leaves X0 n X1 as n
    grows while its interpolation norms stay bounded.  The shift puts the
    kinks t = 2^(shift - m) on both sides of t = 1.
    """
    m = np.arange(n, dtype=np.float64)
    return DiagonalCouple(np.ones(n), 2.0 ** (m - shift)), ratio ** m


def step_tail_element(n=80):
    """Pieces of length 2^k with value 2^-k / (k+1): L1 mass 1/(k+1) per piece, so not in L1 as n grows."""
    k = np.arange(n, dtype=np.float64)
    breaks = np.concatenate([[0.0], 2.0 ** (k + 1) - 1.0])
    return StepFunction(breaks, 2.0 ** -k / (k + 1.0))


DEFAULT_TRUNCATIONS = (4, 8, 16, 24, 32, 40, 48, 56, 64)


def _truncate(f, N):
    if isinstance(f, StepFunction):
        return StepFunction(f.breaks, np.where(np.arange(f.values.size) >= N, f.values, 0.0))
    g = np.array(f, dtype=np.float64)
    g[:N] = 0.0
    return g


def run_density(tid, q=None, weight=None, couple=None, truncations=DEFAULT_TRUNCATIONS, element=None,
                ppd=32, observational=False, decades=40):
    """Errors ||f - f_N|| for the id's norm; passes when they strictly decrease and the last is < 1e-3 ||f||."""
    if tid not in DENSITY_IDS:
        raise KeyError(f"{tid} is not a density id")
    if q is None:
        q = 1.0 if tid in ("D1_8", "D1_11", "D1_21") else 2.0
    check_q(tid, q)
    w = _as_expr(weight if weight is not None else default_weight(tid, q))
    method = "K" if tid in ("D1_2", "D1_11") else "J"
    if couple is None:
        if tid == "D1_11":
            couple, f = StepFunctionCouple(), step_tail_element()
        else:
            couple, f = diagonal_tail_family()
    else:
        f = element
    if element is not None:
        f = element
    if f is None:
        raise ValueError("a custom couple needs an element")
    spec = NormSpec(q, w, method, couple)
    check = check_admissible_K if method == "K" else check_admissible_J
    if check(spec) != INTERMEDIATE:
        raise PreconditionError(f"{tid}: weight {w} is not admissible", "admissibility")
    grid = LogGrid.centered(decades, ppd)
    total = norm_value(spec, f, grid)
    errors = [norm_value(spec, _truncate(f, N), grid) for N in truncations]
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    rel = errors[-1] / total if total > 0 else 0.0
    return DensityReport(tid, q, w.to_str(), getattr(couple, "tag", "?"), list(truncations),
                         [float(e) for e in errors], float(total), float(rel), monotone,
                         bool(monotone and rel < 1e-3), observational)


def density_contrast(q=1.0, truncations=DEFAULT_TRUNCATIONS):
    """X0 n X1 truncation under finite-total-integral weights; recorded, never asserted."""
    return run_density("D1_2", q, weight=default_weight("T1_10", q), truncations=truncations,
                       observational=True)


def embedding_ratios(spec, elements, grid=None):
    """(||f||_{X0+X1} / ||f||_spec, ||f||_spec / ||f||_{X0 n X1}) per element."""
    out = []
    for f in elements:
        s, i = x0x1_norms(spec.couple, f)
        v = norm_value(spec, f, grid)
        out.append((s / v, v / i))
    return out


def run_suite(ids=None, qs=None, samples=50, seed=0, ppd=32):
    """Every acceptance equivalence/corollary run with default weights."""
    table = {
        "T1_1": (1.0, 2.0), "T1_3": (2.0, INF), "T1_5": (INF,), "T1_7": (1.0,),
        "T1_10": (1.0, 2.0), "T1_13": (2.0, INF), "T1_17": (INF,), "T1_20": (1.0,),
        "C1_12": (1.0, 2.0), "C1_16": (2.0, INF), "C1_19": (INF,), "C1_22": (1.0,),
    }
    out = []
    for tid in ids or table:
        for q in qs or table[tid]:
            out.append(run_equivalence(tid, q, samples=samples, seed=seed, ppd=ppd))
    return out


def describe_weight(w: SvExpr):
    return w.to_str()
