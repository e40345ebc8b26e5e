import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from tcenter.expr import Poly2, gcd_poly, parse_poly
from tcenter.field import (
    CenterCase,
    FieldError,
    FieldSpec,
    HomogFactoredPoly,
    IntegralSpec,
    QuadForm,
    boundary_point,
    circle_factors,
    classify_center,
    factors_from_json,
    gradient_nonvanishing,
    linearization,
    pair_factors,
    reduced_hamiltonian,
    sample_domain,
    strong_integral,
)
from tcenter.flow import flow
from tcenter.matrix import Jet2

X, Y = sympy.symbols("x y")


def cas_reduced_field(factors):
    """(-f_y / D, f_x / D) with D the CAS gcd of the partials."""
    f = sympy.Integer(1)
    for (a, b, c), beta in factors:
        f *= (a * X**2 + 2 * b * X * Y + c * Y**2) ** beta
    fx, fy = sympy.diff(f, X), sympy.diff(f, Y)
    D = sympy.gcd(fx, fy)
    return sympy.expand(sympy.cancel(-fy / D)), sympy.expand(sympy.cancel(fx / D))


def test_quadform_validation():
    QuadForm(1, 0, 1)
    with pytest.raises(FieldError):
        QuadForm(1, 1, 1)
    with pytest.raises(FieldError):
        QuadForm(-1, 0, -1)


def test_factored_validation():
    with pytest.raises(FieldError):
        HomogFactoredPoly.of(((1, 0, 1), 1), ((2, 0, 2), 1))
    with pytest.raises(FieldError):
        HomogFactoredPoly.of(((1, 0, 1), 0))


@pytest.mark.parametrize(
    "factors",
    [
        [((1, 0, 1), 1)],
        [((1, 0, 1), 2)],
        [((1, 0, 1), 1), ((1, 0, 2), 1)],
        [((2, 1, 3), 2), ((1, 0, 5), 1), ((1, Fraction(-1, 2), 1), 3)],
    ],
)
def test_reduced_field_matches_cas(factors):
    fs = reduced_hamiltonian(HomogFactoredPoly.of(*factors))
    F1, F2 = cas_reduced_field(factors)
    # the CAS gcd may differ by a positive constant; compare up to one common factor
    q1 = Poly2({m: Fraction(int(c.p), int(c.q)) for m, c in sympy.Poly(F1, X, Y).terms()})
    m, c = fs.F1.leading_term()
    r = q1.coeff(*m) / c
    assert r > 0
    assert fs.F1.scale(r) == q1
    assert fs.F2.scale(r) == Poly2({m: Fraction(int(c.p), int(c.q)) for m, c in sympy.Poly(F2, X, Y).terms()})
    assert gcd_poly(fs.F1, fs.F2).is_constant()


def test_reduced_field_examples():
    c1 = reduced_hamiltonian(circle_factors(1))
    assert (c1.F1, c1.F2) == (parse_poly("-2*y"), parse_poly("2*x"))
    c2 = reduced_hamiltonian(circle_factors(2))
    assert (c2.F1, c2.F2) == (parse_poly("-4*y"), parse_poly("4*x"))
    pair = reduced_hamiltonian(pair_factors())
    f = pair_factors().expand()
    assert pair.F1 == -f.diff("y") and pair.F2 == f.diff("x")
    assert pair.homogeneous_degree == 3


def test_linearization_and_cases():
    assert linearization(reduced_hamiltonian(circle_factors())) == Jet2(0, -2, 2, 0)
    pair = reduced_hamiltonian(pair_factors())
    assert linearization(pair).is_zero()
    assert pair.case is CenterCase.NF1_ZeroLinear
    assert linearization(FieldSpec.from_components("y", "0")) == Jet2(0, 1, 0, 0)


def test_classify_center_examples():
    assert classify_center(Jet2.zero()) is CenterCase.NF1_ZeroLinear
    assert classify_center(Jet2(0, 3, 0, 0)) is CenterCase.NF2_NilpotentNonzero
    assert classify_center(Jet2(1, 0, 0, 1)) is CenterCase.NotTC
    assert classify_center(Jet2(0, -2, 2, 0)) is CenterCase.NF3_NonDegenerate
    # similarity invariance: a conjugated nilpotent stays NF2
    assert classify_center(Jet2(1, -1, 1, -1)) is CenterCase.NF2_NilpotentNonzero


def test_field_must_vanish_at_origin():
    with pytest.raises(FieldError):
        FieldSpec.from_components("x + 1", "y")


def test_strong_integral_and_boundary():
    I = strong_integral(circle_factors(), 1)
    assert I.f_hat == parse_poly("x^2+y^2")
    np.testing.assert_allclose(boundary_point(circle_factors(), 1, 0.0), [1, 0], atol=1e-15)
    np.testing.assert_allclose(boundary_point(circle_factors(), 1, math.pi / 2), [0, 1], atol=1e-15)
    z = boundary_point(pair_factors(), 1, math.pi / 2)
    assert abs(z[1] - 2 ** -0.25) < 1e-14


def test_epsilon_rescales():
    I = strong_integral(pair_factors(), Fraction(1, 4))
    z = boundary_point(I, angle=0.3)
    assert abs(float(pair_factors().expand()(z[0], z[1])) - 0.25) < 1e-14


def test_gradient_nonvanishing_on_samples():
    rng = np.random.default_rng(1)
    I = strong_integral(pair_factors())
    Z = sample_domain(I, 1000, rng)
    assert gradient_nonvanishing(I, Z)


def test_integral_conserved_along_orbits():
    fs = reduced_hamiltonian(pair_factors())
    I = strong_integral(pair_factors())
    rng = np.random.default_rng(2)
    for z in sample_domain(I, 10, rng, 0.1, 1.0):
        w = flow(fs, z, 0.7)
        assert abs(I(*w) - I(*z)) <= 1e-8 * I(*z)


def test_factors_from_json():
    hp = factors_from_json([{"a": "1", "b": "1/2", "c": "3", "beta": 2}])
    assert hp.factors[0][0] == QuadForm(1, Fraction(1, 2), 3)
    assert hp.degree == 4


def test_integral_validation():
    with pytest.raises(FieldError):
        IntegralSpec(parse_poly("x^2 + 1"))
    with pytest.raises(FieldError):
        IntegralSpec(parse_poly("x^2"), 0)
