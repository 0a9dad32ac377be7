import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import logsumexp

from limterp.couples import DerivedCouple, DiagonalCouple, StepFunction, StepFunctionCouple, k_values
from limterp.norms import (
    DEGENERATE, INTERMEDIATE, TRIVIAL_ZERO, DyadicScheme, NormSpec, WindowError, check_admissible_J,
    check_admissible_K, intersection_space_norm, j_norm, j_norm_small_exact, j_norm_upper, k_norm,
    sum_space_norm, x0x1_norms,
)
from limterp.sv import ONE, LogGrid, Recip, parse

INF = math.inf
BASE = DiagonalCouple(np.ones(4), 2.0 ** np.array([-3.0, -1.0, 1.0, 3.0]))


def k_spec(w, q, couple=BASE, **kw):
    return NormSpec(float(q), parse(w) if isinstance(w, str) else w, "K", couple, **kw)


def j_spec(w, q, couple=BASE, **kw):
    return NormSpec(float(q), parse(w) if isinstance(w, str) else w, "J", couple, **kw)


def k_norm_oracle(spec, f):
    """Adaptive quadrature of the K-integrand in s = log t, split at every kink."""
    w0, w1 = spec.couple.w0, spec.couple.w1
    absf = np.abs(f)
    q, th, v = spec.q, spec.theta, spec.weight

    def log_integrand(s):
        logk = logsumexp(np.log(absf) + np.minimum(np.log(w0), s + np.log(w1)))
        return v.logval(np.array([s]))[0] - th * s + logk

    cuts = sorted(set(np.log(w0 / w1).tolist()) | {0.0})
    lo, hi = {"full": (-INF, INF), "upper": (0.0, INF), "lower": (-INF, 0.0)}[spec.interval]
    edges = [lo] + [c for c in cuts if lo < c < hi] + [hi]
    if math.isinf(q):
        s = np.linspace(max(lo, -60.0), min(hi, 60.0), 200001)
        s = np.concatenate([s, [c for c in cuts if lo <= c <= hi]])
        return math.exp(max(log_integrand(x) for x in s))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += quad(lambda s: math.exp(q * log_integrand(s)), a, b, limit=400, epsabs=0, epsrel=1e-10)[0]
    return total ** (1 / q)


# ---------------------------------------------------------------------------
# admissibility


@pytest.mark.parametrize("w,q,verdict", [
    ("pow(ell,-1)", 2, INTERMEDIATE), ("broken(one,pow(ell,-1))", 2, INTERMEDIATE),
    ("pow(ell,-2)", 1, INTERMEDIATE), ("one", 2, TRIVIAL_ZERO), ("pow(ell,-0.5)", 2, TRIVIAL_ZERO),
    ("pow(ell,1)", 1, TRIVIAL_ZERO), ("broken(ell,pow(ell,-1))", INF, INTERMEDIATE),
])
def test_k_admissibility(w, q, verdict):
    assert check_admissible_K(k_spec(w, q)) == verdict


@pytest.mark.parametrize("w,q,verdict", [
    ("pow(ell,1)", 2, INTERMEDIATE), ("broken(ell,one)", 2, INTERMEDIATE), ("pow(ell,2)", 1.5, INTERMEDIATE),
    ("one", 1, INTERMEDIATE), ("one", 2, DEGENERATE), ("pow(ell,0.5)", 2, DEGENERATE),
    ("pow(ell,-1)", 2, DEGENERATE),
])
def test_j_admissibility(w, q, verdict):
    assert check_admissible_J(j_spec(w, q)) == verdict


def test_spec_validation():
    with pytest.raises(ValueError):
        k_spec("one", 0.5)
    with pytest.raises(ValueError):
        NormSpec(2.0, ONE, "L", BASE)
    with pytest.raises(ValueError):
        k_spec("one", 2, theta=1.5)
    with pytest.raises(ValueError):
        k_spec("one", 2, interval="(2,3)")


# ---------------------------------------------------------------------------
# K-norm values


@pytest.mark.parametrize("w,q,interval", [
    ("pow(ell,-1)", 2, "(0,inf)"), ("broken(one,pow(ell,-1))", 2, "(0,inf)"), ("pow(ell,-2)", 1, "(0,inf)"),
    ("pow(ell,-1)", 3, "(1,inf)"), ("pow(ell,-1)", 1.5, "(0,inf)"), ("broken(ell,pow(ell,-1))", INF, "(0,inf)"),
    ("pow(ell,-1)", INF, "(0,1)"),
])
def test_k_norm_matches_adaptive_quadrature(w, q, interval):
    spec = k_spec(w, q, interval=interval)
    f = np.array([1.0, -3.0, 0.25, 2.0])
    assert k_norm(spec, f) == pytest.approx(k_norm_oracle(spec, f), rel=1e-6)


def test_k_norm_zero_element():
    assert k_norm(k_spec("pow(ell,-1)", 2), np.zeros(4)) == 0.0
    step = StepFunction(np.array([0.0, 1.0]), np.array([0.0]))
    assert k_norm(k_spec("pow(ell,-1)", 2, StepFunctionCouple()), step) == 0.0


def test_k_norm_divergent_is_inf():
    # the constant weight leaves the t -> inf end non-integrable
    assert k_norm(k_spec("one", 2), np.ones(4)) == INF


def test_k_norm_step_couple_against_diagonal_form():
    # the indicator of (0, 1) has K = min(1, t) on the step couple, as does the couple (1, 1) on R^1
    step = StepFunction(np.array([0.0, 1.0]), np.array([1.0]))
    spec = k_spec("pow(ell,-1)", 2, StepFunctionCouple())
    diag = k_spec("pow(ell,-1)", 2, DiagonalCouple(np.ones(1), np.ones(1)))
    assert k_norm(spec, step) == pytest.approx(k_norm(diag, np.ones(1)), rel=1e-8)


def test_k_norm_grid_refinement():
    spec = k_spec("broken(one,pow(ell,-1))", 2)
    f = np.array([1.0, -3.0, 0.25, 2.0])
    a = k_norm(spec, f, LogGrid.centered(40, 32))
    b = k_norm(spec, f, LogGrid.centered(40, 64))
    assert abs(a - b) <= 1e-6 * a


def test_swap_consistency():
    # theta = 1 on the couple equals theta = 0 on the swapped couple with weight v(1/t)
    v = parse("broken(one,pow(ell,-1))")
    f = np.array([1.0, -3.0, 0.25, 2.0])
    a = k_norm(NormSpec(2.0, v, "K", BASE, theta=1.0), f)
    b = k_norm(NormSpec(2.0, Recip(v), "K", DerivedCouple(BASE, "swap")), f)
    assert a == pytest.approx(b, rel=1e-8)


finite_vectors = st.lists(st.floats(-1e3, 1e3, allow_subnormal=False), min_size=4, max_size=4).map(np.array)


@given(finite_vectors, st.floats(1e-6, 1e6), st.sampled_from([1.0, 2.0, INF]))
def test_k_norm_homogeneous(f, lam, q):
    spec = k_spec("pow(ell,-2)" if q == 1 else "pow(ell,-1)", q)
    assert k_norm(spec, lam * f) == pytest.approx(lam * k_norm(spec, f), rel=1e-10, abs=1e-300)


@given(finite_vectors, finite_vectors, st.sampled_from([1.0, 2.0, INF]))
def test_k_norm_triangle(f, g, q):
    spec = k_spec("pow(ell,-2)" if q == 1 else "pow(ell,-1)", q)
    assert k_norm(spec, f + g) <= (k_norm(spec, f) + k_norm(spec, g)) * (1 + 1e-10) + 1e-300


@given(finite_vectors.filter(lambda f: np.any(f)), st.sampled_from([("pow(ell,-1)", 2.0), ("pow(ell,-2)", 1.0),
                                                                  ("broken(ell,pow(ell,-1))", INF)]))
def test_embeddings_between_sum_and_intersection(f, wq):
    # min(1, t) K(f, 1) <= K(f, t) <= min(1, t) ||f||_{X0 n X1}, so the norm sits between
    # c K(f, 1) and c ||f||_{X0 n X1} with c the norm of min(1, t)
    spec = k_spec(*wq)
    c = k_norm(k_spec(*wq, couple=DiagonalCouple(np.ones(1), np.ones(1))), np.ones(1))
    s, i = x0x1_norms(BASE, f)
    val = k_norm(spec, f)
    assert c * s * (1 - 1e-9) <= val <= c * i * (1 + 1e-9)


# ---------------------------------------------------------------------------
# J-norms


def test_j_single_scale():
    m = 3
    c = DiagonalCouple(np.ones(1), np.array([2.0 ** -m]))
    v = parse("pow(ell,-1)")
    for q in (1.0, 2.0, INF):
        got = j_norm_small_exact(j_spec(v, q, c), np.array([5.0]), DyadicScheme(m, m, tails=False))
        assert got == pytest.approx(5.0 * v(2.0 ** m), rel=1e-12)


def test_j_norm_zero_element():
    assert j_norm(j_spec("pow(ell,1)", 2), np.zeros(4)) == 0.0
    assert j_norm_upper(j_spec("pow(ell,1)", 2), np.zeros(4)) == 0.0


def test_j_window_must_cover_kinks():
    with pytest.raises(WindowError):
        j_norm(j_spec("pow(ell,1)", 2), np.ones(4), DyadicScheme(-1, 1))
    with pytest.raises(WindowError):
        DyadicScheme(2, 1)


@given(finite_vectors.filter(lambda f: np.any(f)), st.sampled_from([1.0, 2.0, INF]))
@settings(max_examples=15)
def test_j_exact_below_one_hot_upper(f, q):
    spec = j_spec("pow(ell,1)" if q != INF else "pow(ell,2)", q)
    scheme = DyadicScheme.for_couple(BASE)
    assert j_norm_small_exact(spec, f, scheme) <= j_norm_upper(spec, f, scheme) * (1 + 1e-6)


def test_j_window_monotone():
    spec = j_spec("pow(ell,1)", 2)
    f = np.array([1.0, -3.0, 0.25, 2.0])
    base = DyadicScheme.for_couple(BASE)
    vals = [j_norm(spec, f, base.widened(k)) for k in (0, 2, 4)]
    # a wider window only offers more representations
    assert vals[1] <= vals[0] * (1 + 1e-4) and vals[2] <= vals[1] * (1 + 1e-4)
    assert vals[2] == pytest.approx(vals[0], rel=1e-3)


@given(finite_vectors.filter(lambda f: np.any(f)), st.floats(1e-4, 1e4))
@settings(max_examples=15)
def test_j_norm_homogeneous(f, lam):
    spec = j_spec("pow(ell,1)", 2)
    assert j_norm(spec, lam * f) == pytest.approx(lam * j_norm(spec, f), rel=1e-4)


# ---------------------------------------------------------------------------
# sum and intersection with X0


@pytest.mark.parametrize("method", ["K", "J"])
def test_sum_space_below_both_norms(method):
    f = np.array([1.0, -3.0, 0.25, 2.0])
    w0 = np.array([0.5, 2.0, 1.0, 4.0])
    spec = k_spec("pow(ell,-1)", 2) if method == "K" else j_spec("pow(ell,1)", 2)
    y = k_norm(spec, f) if method == "K" else j_norm(spec, f)
    val, h = sum_space_norm(f, w0, spec)
    assert val <= float(w0 @ np.abs(f)) * (1 + 1e-9)
    assert val <= y * (1 + 1e-6)
    assert np.all(np.abs(h) <= np.abs(f) * (1 + 1e-9))


def test_sum_space_q1_closed_form():
    # at q = 1 the optimum sends each coordinate to the cheaper side
    f = np.array([1.0, -3.0, 0.25, 2.0])
    spec = k_spec("pow(ell,-2)", 1)
    units = np.array([k_norm(spec, e) for e in np.eye(4)])
    w0 = units * np.array([0.5, 2.0, 0.5, 2.0])
    val, _ = sum_space_norm(f, w0, spec)
    assert val == pytest.approx(float(np.sum(np.minimum(w0, units) * np.abs(f))), rel=1e-9)


def test_sum_space_zero():
    val, h = sum_space_norm(np.zeros(4), np.ones(4), k_spec("pow(ell,-1)", 2))
    assert val == 0.0 and not np.any(h)


def test_intersection_norm_is_max():
    assert intersection_space_norm(np.array([2.0]), np.array([1.0]), 3.0) == 3.0
    assert intersection_space_norm(np.array([-5.0]), np.array([1.0]), 3.0) == 5.0
    assert intersection_space_norm(np.zeros(1), np.array([1.0]), 0.0) == 0.0


def test_k_values_feed_x0x1_norms():
    f = np.array([1.0, -3.0, 0.25, 2.0])
    s, i = x0x1_norms(BASE, f)
    assert s == pytest.approx(float(k_values(BASE, f, np.array([1.0]))[0]))
    assert i == max(BASE.norm0(f), BASE.norm1(f))
