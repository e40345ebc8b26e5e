from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from tcenter.expr import (
    BothZeroError,
    DivisionNotExact,
    NonPolynomialError,
    ParseError,
    Poly2,
    diff_poly,
    divides,
    eval_poly,
    exact_div,
    gcd_poly,
    normalize,
    parse_poly,
    to_text,
)

X, Y = sympy.symbols("x y")


def to_sympy(p: Poly2):
    return sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in p.items()])


def from_sympy(e) -> Poly2:
    poly = sympy.Poly(sympy.expand(e), X, Y)
    return Poly2({m: Fraction(int(c.p), int(c.q)) for m, c in poly.terms() if c != 0})


coef = st.fractions(min_value=-5, max_value=5, max_denominator=6)
polys = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=5).map(Poly2)


# -- parser ----------------------------------------------------------------------

def test_parse_examples():
    assert parse_poly("x^2+y^2").terms == {(2, 0): 1, (0, 2): 1}
    assert parse_poly("0").terms == {}
    assert parse_poly("(x+y)^2 - x^2 - 2*x*y").terms == {(0, 2): 1}


def test_parse_matches_cas():
    text = "(1/2*x - 3*y)^3 - (x + 2/3)*(y^2 - x)"
    expected = from_sympy((sympy.Rational(1, 2) * X - 3 * Y) ** 3 - (X + sympy.Rational(2, 3)) * (Y**2 - X))
    assert parse_poly(text) == expected


def test_parse_precedence():
    assert parse_poly("-x^2") == -(Poly2.x() ** 2)
    assert parse_poly("2*x/4") == Poly2.x().scale(Fraction(1, 2))
    assert parse_poly("1 - 2 - 3") == Poly2.const(-4)


@pytest.mark.parametrize("text", ["x +", "x y", "(x", "x^y", "x^2^3", "3 $ x", ""])
def test_parse_rejects(text):
    with pytest.raises(ParseError) as info:
        parse_poly(text)
    assert info.value.expected


@pytest.mark.parametrize("text", ["x^-1", "1/x", "x/(y+1)"])
def test_parse_non_polynomial(text):
    with pytest.raises(NonPolynomialError):
        parse_poly(text)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_poly("x + * y")
    assert info.value.position == 4


@given(polys)
def test_print_parse_round_trip(p):
    assert parse_poly(to_text(p)) == p


def test_canonical_printing():
    assert to_text(parse_poly("4*x*y^2 - 1/3 + 2/3*x^3")) == "2/3*x^3 + 4*x*y^2 - 1/3"
    assert to_text(Poly2()) == "0"


# -- arithmetic ---------------------------------------------------------------------

@given(polys, polys, polys)
@settings(max_examples=60)
def test_ring_axioms(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p + q == q + p and p * q == q * p
    assert p - p == Poly2()


@given(polys, polys)
@settings(max_examples=60)
def test_product_matches_cas(p, q):
    assert p * q == from_sympy(to_sympy(p) * to_sympy(q))


def test_no_zero_coefficients_stored():
    p = parse_poly("x + y") - parse_poly("x")
    assert p.terms == {(0, 1): 1}


def test_eval_examples():
    assert eval_poly(parse_poly("x^2+y^2"), (3, 4)) == 25
    assert eval_poly(Poly2(), (1.5, 2.5)) == 0
    assert eval_poly(parse_poly("x^2*y - y^3"), (1, 2)) == -6


@given(polys, st.floats(-2, 2), st.floats(-2, 2))
def test_eval_matches_exact(p, x, y):
    exact = sum(float(c) * x**i * y**j for (i, j), c in p.items())
    bound = 1e-12 * (1 + sum(abs(float(c)) * 2 ** (i + j) for (i, j), c in p.items()))
    assert abs(eval_poly(p, (x, y)) - exact) <= bound


def test_diff_examples():
    assert diff_poly(parse_poly("x^2*y"), "x") == parse_poly("2*x*y")
    assert diff_poly(parse_poly("x^2"), "y") == Poly2()
    assert diff_poly(parse_poly("(x^2+y^2)^2"), "x") == parse_poly("4*x*(x^2+y^2)")


@given(polys, polys)
@settings(max_examples=60)
def test_leibniz(p, q):
    for v in "xy":
        assert diff_poly(p * q, v) == diff_poly(p, v) * q + p * diff_poly(q, v)


def test_exact_division():
    p = parse_poly("(x^2+y^2)*(x-2*y)")
    assert exact_div(p, parse_poly("x^2+y^2")) == parse_poly("x-2*y")
    with pytest.raises(DivisionNotExact):
        exact_div(p, parse_poly("x+y"))


# -- gcd ----------------------------------------------------------------------------

def test_gcd_examples():
    assert gcd_poly(parse_poly("x^2*y"), parse_poly("x*y^2")) == parse_poly("x*y")
    assert gcd_poly(parse_poly("x^2+y^2"), parse_poly("x-y")) == Poly2.const(1)
    f = parse_poly("(x^2+y^2)^2")
    assert gcd_poly(f.diff("x"), f.diff("y")) == parse_poly("x^2+y^2")


def test_gcd_both_zero():
    with pytest.raises(BothZeroError):
        gcd_poly(Poly2(), Poly2())


def test_gcd_with_zero_is_normalized_input():
    p = parse_poly("-6*x^2 + 4*y")
    assert gcd_poly(p, Poly2()) == normalize(p)


def test_gcd_matches_cas():
    p = parse_poly("(x^2+y^2)^2*(x^2+2*y^2)*(x-y)")
    q = parse_poly("(x^2+y^2)*(x^2+2*y^2)^3*(x+3*y)")
    assert gcd_poly(p, q) == from_sympy(sympy.gcd(to_sympy(p), to_sympy(q)))


@given(polys, polys)
@settings(max_examples=40, deadline=None)
def test_gcd_divides_both(p, q):
    if p.is_zero() and q.is_zero():
        return
    g = gcd_poly(p, q)
    assert divides(g, p) and divides(g, q)


@given(st.tuples(st.integers(0, 2), st.integers(0, 2)), st.tuples(st.integers(0, 2), st.integers(0, 2)), coef.filter(bool), coef.filter(bool))
@settings(max_examples=40, deadline=None)
def test_gcd_monomial_multiples(ma, mb, ca, cb):
    g = parse_poly("x^2 + x*y + 3*y^2 - 1")
    a, b = Poly2.monomial(*ma, ca), Poly2.monomial(*mb, cb)
    assert gcd_poly(a * g, b * g) == normalize(g * gcd_poly(a, b))


def test_gcd_normal_form():
    g = gcd_poly(parse_poly("-4*x^2 - 4*y^2"), parse_poly("6*x^3 + 6*x*y^2"))
    assert g == parse_poly("x^2+y^2")
