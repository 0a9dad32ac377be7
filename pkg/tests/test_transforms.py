import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from limterp import transforms as tr
from limterp.sv import ELL, ONE, Const, LogGrid, Pow, check_sv_membership, parse
from limterp.transforms import PreconditionError, TransformSpec

B_PAIRS = ("broken(one,pow(ell,-1))", "broken(one,pow(ell,-2))", "broken(ell,pow(ell,-1))",
           "broken(exp_logpow(1,0.5),pow(ell,-1))")
A_PAIRS = ("broken(ell,one)", "broken(pow(ell,2),one)", "broken(ell,pow(ell,-1))",
           "broken(exp_logpow(1,0.5),one)")
XS = np.logspace(-4, 4, 9)


def ell_at(x):
    return 1.0 + abs(math.log(x))


# ---------------------------------------------------------------------------
# integral regime, closed forms


@pytest.mark.parametrize("x", [1e-6, 0.1, 0.5, 1.0, math.e, 1e3, 1e9])
def test_a_from_b_broken_log_q2(x):
    # tail of t^-1 l^-2 over (x, inf) is 1/(1 + log x) for x >= 1; below 1 add |log x|
    a = tr.a_from_b(parse("broken(one,pow(ell,-1))"), 2.0)
    expect = 1.0 if x >= 1 else ell_at(x)
    assert a(x) == pytest.approx(expect, rel=1e-9)


def test_a_from_b_q1_is_plain_tail():
    b = parse("broken(one,pow(ell,-2))")
    a = tr.a_from_b(b, 1.0)
    # int_x^inf t^-1 (1 + log t)^-2 dt = 1 / (1 + log x)
    assert a(math.e ** 2) == pytest.approx(1.0 / 3.0, rel=1e-9)


@pytest.mark.parametrize("x", [1e-5, 0.3, 1.0, 20.0, 1e7])
def test_b_from_a_broken_log_q2(x):
    b = tr.b_from_a(parse("broken(ell,one)"), 2.0)
    expect = 1.0 / ell_at(x) if x >= 1 else 1.0
    assert b(x) == pytest.approx(expect, rel=1e-9)


@pytest.mark.parametrize("x", [math.exp(-1), math.e, 1e4])
def test_b_from_a_q_inf(x):
    # head of t^-1 / a over (0, x): 1/(1 + |log x|) below 1, 1 + log x above
    b = tr.b_from_a(parse("broken(pow(ell,2),one)"), math.inf)
    expect = ell_at(x) if x < 1 else 1.0 / ell_at(x)
    assert b(x) == pytest.approx(expect, rel=1e-9)


def test_a_from_b_rejects_finite_total():
    with pytest.raises(PreconditionError) as exc:
        tr.a_from_b(parse("pow(ell,-2)"), 1.0)
    assert "extend_zero" in str(exc.value)


def test_a_from_b_rejects_divergent_tail():
    with pytest.raises(PreconditionError):
        tr.a_from_b(ONE, 2.0)


def test_b_from_a_rejects_finite_total():
    with pytest.raises(PreconditionError):
        tr.b_from_a(parse("pow(ell,2)"), 2.0)


@pytest.mark.parametrize("q", [math.inf, 0.5])
def test_a_from_b_q_range(q):
    with pytest.raises(PreconditionError):
        tr.a_from_b(parse("broken(one,pow(ell,-1))"), q)


# ---------------------------------------------------------------------------
# derivative regime


@pytest.mark.parametrize("x,expect", [(math.e, 1.0), (1e5, 1.0), (math.exp(-1), 4.0)])
def test_a_from_b_deriv_ell_inverse(x, expect):
    # l^-1 above 1 gives a = 1; the l branch below 1 gives a = l^2
    a = tr.a_from_b_deriv(parse("broken(ell,pow(ell,-1))"))
    assert a(x) == pytest.approx(expect, rel=1e-9)


@pytest.mark.parametrize("x", [1.0, math.e, 1e6])
def test_a_from_b_deriv_ell_inverse_square(x):
    a = tr.a_from_b_deriv(parse("broken(pow(ell,2),pow(ell,-2))"))
    assert a(x) == pytest.approx(0.5 / ell_at(x), rel=1e-9)


@given(st.floats(0.01, 100.0), st.floats(-10, 10))
def test_a_from_b_deriv_homogeneous(c, s):
    b = parse("broken(ell,pow(ell,-1))")
    x = math.exp(s)
    lhs = tr.a_from_b_deriv(Const(c) * b)(x)
    assert lhs == pytest.approx(c * tr.a_from_b_deriv(b)(x), rel=1e-9)


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.9])
def test_b_from_a_deriv_ell_branch(x):
    b = tr.b_from_a_deriv(parse("broken(ell,pow(ell,-1))"))
    assert b(x) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.9])
def test_b_from_a_deriv_sqrt_log(x):
    b = tr.b_from_a_deriv(parse("broken(pow(ell,0.5),pow(ell,-1))"))
    assert b(x) == pytest.approx(0.5 / math.sqrt(ell_at(x)), rel=1e-9)


@given(st.floats(0.01, 100.0), st.floats(-10, 10))
def test_b_from_a_deriv_homogeneous(c, s):
    a = parse("broken(ell,pow(ell,-1))")
    x = math.exp(s)
    assert tr.b_from_a_deriv(Const(c) * a)(x) == pytest.approx(c * tr.b_from_a_deriv(a)(x), rel=1e-9)


def test_derivative_regime_needs_decreasing_weight():
    with pytest.raises(PreconditionError):
        tr.a_from_b_deriv(parse("broken(one,pow(ell,-1))"))
    with pytest.raises(PreconditionError):
        tr.b_from_a_deriv(ELL)


def test_transform_spec_regime_gates():
    b = parse("broken(ell,pow(ell,-1))")
    TransformSpec(math.inf, "a_from_b", "derivative", b)
    TransformSpec(1.0, "b_from_a", "derivative", b)
    with pytest.raises(PreconditionError):
        TransformSpec(2.0, "a_from_b", "derivative", b)
    with pytest.raises(PreconditionError):
        TransformSpec(math.inf, "a_from_b", "integral", b)
    with pytest.raises(PreconditionError):
        TransformSpec(1.0, "b_from_a", "integral", b)


# ---------------------------------------------------------------------------
# extensions


def test_extend_at_zero_constant_beta():
    B = tr.extend_weight_at_zero(Pow(ELL, -2.0), ONE, 1.0)
    ref = parse("broken(one,pow(ell,-2))")
    t = LogGrid(1e-6, 1e6, 8).t
    np.testing.assert_allclose(B(t), ref(t), rtol=1e-14)


def test_extend_at_infinity_constant_alpha():
    A = tr.extend_weight_at_infinity(ELL, ONE, 2.0)
    ref = parse("broken(ell,one)")
    t = LogGrid(1e-6, 1e6, 8).t
    np.testing.assert_allclose(A(t), ref(t), rtol=1e-14)


def test_extend_match_constant_is_continuous():
    B = tr.extend_weight_at_zero(Const(3.0) * Pow(ELL, -2.0), ONE, 1.0, continuity="match_constant")
    assert B(1.0 - 1e-12) == pytest.approx(B(1.0), rel=1e-9)


def test_extend_rejects_convergent_beta():
    with pytest.raises(PreconditionError):
        tr.extend_weight_at_zero(Pow(ELL, -2.0), Pow(ELL, -2.0), 1.0)


def test_extend_derivative_regime_continuous():
    # decreasing with a finite value at 0+, so the derivative regime applies
    b = parse("tailinf(pow(ell,-1),2)")
    B = tr.extend_weight_at_zero(b, None, math.inf, regime="derivative")
    assert B(1.0 - 1e-12) == pytest.approx(B(1.0), rel=1e-9)
    assert B(2.0) == b(2.0)


def test_extend_derivative_regime_rejects_increasing_b():
    with pytest.raises(PreconditionError):
        tr.extend_weight_at_zero(Pow(ELL, -1.0), None, math.inf, regime="derivative")


@pytest.mark.parametrize("stage", sorted(tr.STAGES))
def test_named_stages_exist(stage):
    assert callable(tr.STAGES[stage])


# ---------------------------------------------------------------------------
# product identity


@pytest.mark.parametrize("q", [2.0, 3.0, 1.5])
@pytest.mark.parametrize("b", B_PAIRS)
def test_product_identity_from_b(q, b):
    bb = parse(b)
    rep = tr.check_product_identity(tr.a_from_b(bb, q), bb, q, XS, "a_from_b")
    qc = q / (q - 1)
    assert rep.constant == pytest.approx((1 / (qc - 1)) ** (1 / qc), rel=1e-15)
    assert rep.passed and rep.rel_std < 1e-6


@pytest.mark.parametrize("q", [2.0, 3.0, 1.5])
@pytest.mark.parametrize("a", A_PAIRS)
def test_product_identity_from_a(q, a):
    aa = parse(a)
    rep = tr.check_product_identity(aa, tr.b_from_a(aa, q), q, XS, "b_from_a")
    assert rep.constant == pytest.approx((1 / (q - 1)) ** (1 / q), rel=1e-15)
    assert rep.passed and rep.rel_std < 1e-6


def test_product_identity_at_e_is_one_for_q2():
    b = parse("broken(one,pow(ell,-1))")
    rep = tr.check_product_identity(tr.a_from_b(b, 2.0), b, 2.0, [math.e, 0.1, 1.0, 10.0])
    np.testing.assert_allclose(rep.values, 1.0, rtol=1e-6)


def test_product_identity_q3_from_a_constant():
    a = parse("broken(ell,one)")
    rep = tr.check_product_identity(a, tr.b_from_a(a, 3.0), 3.0, XS, "b_from_a")
    np.testing.assert_allclose(rep.values, 0.5 ** (1 / 3), rtol=1e-6)


def test_product_identity_needs_finite_q():
    with pytest.raises(PreconditionError):
        tr.check_product_identity(ELL, ELL, 1.0, XS)


# ---------------------------------------------------------------------------
# invariants


@pytest.mark.parametrize("b", B_PAIRS)
@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_transform_output_is_slowly_varying(b, q):
    a = tr.a_from_b(parse(b), q)
    assert check_sv_membership(a, 0.5, LogGrid.centered(40, 16)).passed


@pytest.mark.parametrize("b", B_PAIRS)
@pytest.mark.parametrize("q", [2.0, 3.0])
def test_round_trip_equivalent(b, q):
    bb = parse(b)
    back = tr.b_from_a(tr.a_from_b(bb, q), q)
    t = LogGrid.centered(40, 8).t
    r = back(t) / bb(t)
    assert np.max(r) / np.min(r) < 10.0


@given(st.floats(0.01, 100.0), st.sampled_from([1.0, 2.0, 3.0]), st.floats(-15, 15))
def test_a_from_b_homogeneous(c, q, s):
    b = parse("broken(one,pow(ell,-2))")
    x = math.exp(s)
    assert tr.a_from_b(Const(c) * b, q)(x) == pytest.approx(c * tr.a_from_b(b, q)(x), rel=1e-8)
