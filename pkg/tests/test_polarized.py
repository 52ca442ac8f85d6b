import cmath

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from discbundle.errors import DomainError, OrderError
from discbundle.polarized import (
    Taylor,
    check_real_potential,
    const,
    diagonal,
    eval_jet,
    evaluate,
    exp,
    log,
    parse,
    w,
    z,
)

BALL = -log(1 - z(0) * w(0))


def test_bilinear():
    jet = eval_jet(z(0) * w(0), [0.5, 0.5], 2)
    assert jet.value == 0.25
    assert jet[(1,), (1,)] == 1.0
    assert jet[(2,), (0,)] == 0.0


def test_ball_potential_at_origin():
    jet = eval_jet(BALL, [0, 0], 2)
    assert jet.value == 0
    assert jet.d(0) == 0 and jet.d(1) == 0
    assert jet.d(0, 1) == 1


def test_ball_potential_mixed_second():
    jet = eval_jet(BALL, [0.5, 0.5], 2)
    assert abs(jet.d(0, 1) - 16 / 9) < 1e-15


def test_value_matches_plain_evaluation(rng):
    expr = exp(z(0) * w(1)) / (3 - z(1) * w(0)) + log(2 + z(0) * w(0)) ** 2
    for _ in range(5):
        p = rng.normal(size=4) * 0.4 + 1j * rng.normal(size=4) * 0.4
        assert eval_jet(expr, p, 4).value == pytest.approx(evaluate(expr, p), rel=1e-14)


def test_order_bounds():
    with pytest.raises(OrderError):
        eval_jet(BALL, [0, 0], 5)
    with pytest.raises(OrderError):
        eval_jet(BALL, [0, 0], -1)
    with pytest.raises(OrderError):
        eval_jet(BALL, [0, 0], 2)[(3,), (0,)]


@pytest.mark.parametrize("point", [[1.0, 1.0], [2.0, 0.5]])
def test_log_singularity(point):
    with pytest.raises(DomainError):
        eval_jet(BALL, point, 2)


def test_division_singularity():
    with pytest.raises(DomainError):
        eval_jet(1 / (z(0) - 1), [1.0, 0.0], 1)


def test_log_branch_cut_is_closed():
    with pytest.raises(DomainError):
        evaluate(log(z(0)), [-2.0, 0.0])
    # just off the axis is fine
    assert evaluate(log(z(0)), [-2.0 + 1e-9j, 0.0]).imag == pytest.approx(np.pi, abs=1e-8)


def _sympy_jet_check(expr_sym, expr_ad, syms, point, order):
    jet = eval_jet(expr_ad, point, order)
    subs = dict(zip(syms, point))
    for (a, b), val in jet.items():
        e = a + b
        d = expr_sym
        for s, k in zip(syms, e):
            if k:
                d = sp.diff(d, s, k)
        assert complex(d.subs(subs)) == val, (a, b)


def test_polynomial_derivatives_are_exact():
    z1, z2, w1, w2 = sp.symbols("z1 z2 w1 w2")
    sym = 3 * z1**2 * w1**2 - 5 * z1 * w2 + 7 * z2**3 * w1 + 2 * z1 * z2 * w1 * w2 - 4
    ad = 3 * z(0) ** 2 * w(0) ** 2 - 5 * z(0) * w(1) + 7 * z(1) ** 3 * w(0) + 2 * z(0) * z(1) * w(0) * w(1) - 4
    _sympy_jet_check(sym, ad, [z1, z2, w1, w2], [2, -1, 3, 1], 4)


def test_rational_function_matches_sympy():
    z1, w1 = sp.symbols("z1 w1")
    sym = sp.exp(z1 * w1) / (2 - z1) - sp.log(1 - z1 * w1)
    ad = exp(z(0) * w(0)) / (2 - z(0)) - log(1 - z(0) * w(0))
    p = [0.3 + 0.1j, 0.3 - 0.1j]
    jet = eval_jet(ad, p, 4)
    for (a, b), val in jet.items():
        d = sym
        if a[0]:
            d = sp.diff(d, z1, a[0])
        if b[0]:
            d = sp.diff(d, w1, b[0])
        ref = complex(sp.N(d.subs({z1: sp.nsimplify(p[0]), w1: sp.nsimplify(p[1])}), 30))
        assert abs(val - ref) <= 1e-13 * max(1.0, abs(ref))


def test_first_derivatives_against_central_differences(rng):
    expr = -log(1 - z(0) * w(0) - z(1) * w(1)) + 0.1 * exp(z(0) * w(1) + z(1) * w(0))
    h = 1e-5
    for _ in range(10):
        p = diagonal(0.4 * (rng.normal(size=2) + 1j * rng.normal(size=2)) / 2)
        jet = eval_jet(expr, p, 1)
        for s in range(4):
            e = np.zeros(4)
            e[s] = h
            fd = (evaluate(expr, p + e) - evaluate(expr, p - e)) / (2 * h)
            assert abs(fd - jet.d(s)) <= 1e-8 * max(1.0, abs(jet.d(s)))


def test_exp_chain_consistency(rng):
    g = z(0) * w(0) - 0.5 * z(1) ** 2 * w(0) + log(3 + z(1) * w(1))
    for _ in range(5):
        p = 0.3 * (rng.normal(size=4) + 1j * rng.normal(size=4))
        via_expr = eval_jet(exp(g), p, 4)
        inner = eval_jet(g, p, 4).taylor
        composed = inner.exp().raw()
        ref = np.array([v for _, v in via_expr.items()])
        assert np.max(np.abs(ref - composed)) <= 1e-13 * np.max(np.abs(composed))


def test_taylor_integer_power_and_reciprocal():
    t = Taylor.variable(1, 4, 0, 2.0)
    inv = (t**-2).raw()
    # d^k/dx^k x^-2 at 2
    ref = [0.25, -0.25, 3 / 8, -3 / 4, 15 / 8]
    assert np.allclose(inv, ref, rtol=1e-15)


def test_reality_report():
    pts = [np.array([0.3 + 0.2j]), np.array([-0.1 - 0.6j])]
    assert check_real_potential(BALL, pts)
    rep = check_real_potential(z(0), pts)
    assert not rep.ok and rep.worst_index == 1
    assert check_real_potential(z(0) * w(0), [np.array([0.5 + 0.5j])]).max_imag == 0.0


def test_bidisc_points_real(rng):
    pts = [0.9 * (rng.random(2) * np.exp(2j * np.pi * rng.random(2))) for _ in range(10)]
    assert check_real_potential(z(0) * w(0) + z(1) * w(1), pts)


@settings(max_examples=40, deadline=None)
@given(
    st.complex_numbers(max_magnitude=0.6, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=0.6, allow_nan=False, allow_infinity=False),
)
def test_hermitian_symmetry_of_jet(p1, p2):
    p = np.array([p1, p2]) / np.sqrt(2)
    expr = -log(1 - z(0) * w(0) - z(1) * w(1)) + 0.2 * (z(0) * w(1) + z(1) * w(0)) ** 2
    jet = eval_jet(expr, diagonal(p), 4)
    for (a, b), val in jet.items():
        assert abs(val - np.conj(jet[b, a])) <= 1e-12 * max(1.0, abs(val))


@pytest.mark.parametrize(
    "text",
    [
        "(neg (log (sub 1 (mul z1 w1))))",
        "(add (exp (mul z1 w2)) (div 1 (sub 3 z2)) (pow w1 3))",
        "(sub z1)",
        "(mul 0.5 (log (add 2 (mul z1 w1))))",
    ],
)
def test_parse_round_trip(text):
    e = parse(text)
    assert parse(e.to_text()) == e
    p = np.array([0.2 + 0.1j, 0.1, 0.2 - 0.1j, 0.3])
    assert evaluate(parse(e.to_text()), p) == evaluate(e, p)


def test_parse_matches_builder():
    assert parse("(neg (log (sub 1 (mul z1 w1))))") == BALL
    assert parse("(pow z2 -2)") == z(1) ** -2


@pytest.mark.parametrize("bad", ["", "(foo z1)", "(add z1", "(pow z1 1.5)", "z1 z2", "(log z1 z2)", "(add z1)", "q3"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse(bad)


def test_constant_expressions():
    assert evaluate(const(2) * 3 + 1, []) == 7
    assert cmath.isclose(evaluate(exp(const(1.0)), []), cmath.e)


def test_substitute_and_shift():
    e = z(0) * w(0)
    assert e.shift(1) == z(1) * w(1)
    sub = e.substitute(lambda op, i: const(2.0) if op == "z" else None)
    assert evaluate(sub, [0.0, 3.0]) == 6.0
