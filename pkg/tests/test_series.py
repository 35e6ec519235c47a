from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confmass.series import (
    MASS,
    ONE,
    SPHERE_VOL,
    ZERO,
    PolyQ,
    RadialSeries,
    form_norm_series,
    normalized_green_series,
    series_add,
    series_derivative,
    series_mul,
    series_pow_rational,
    verify_flux_limit,
    verify_mass_derivative,
)

A = PolyQ.symbol(MASS)
W = PolyQ.symbol(SPHERE_VOL)


# -- polynomial ring ---------------------------------------------------------


def test_poly_arithmetic():
    p = A * W + PolyQ.const(2)
    q = p - PolyQ.const(2)
    assert q == A * W
    assert (p - p).is_zero()
    assert (A * A) * W == A * (A * W)
    assert PolyQ.const(Fraction(1, 3)) * PolyQ.const(3) == ONE


def test_poly_symbols_and_repr():
    p = PolyQ.const(-8) * A * W
    assert p.symbols() == {MASS, SPHERE_VOL}
    assert repr(p) == "-8*A*w"
    assert repr(ZERO) == "0"


# -- series arithmetic -------------------------------------------------------


def test_series_mul_trivial():
    one_plus = RadialSeries.build({0: 1, 1: 1}, 4)
    one_minus = RadialSeries.build({0: 1, 1: -1}, 4)
    prod = series_mul(one_plus, one_minus)
    assert prod.coefficient(0) == ONE
    assert prod.coefficient(1) == ZERO
    assert prod.coefficient(2) == PolyQ.const(-1)


def test_series_laurent_shift():
    laurent = RadialSeries.build({-2: 1, 0: A}, 4)
    r2 = RadialSeries.monomial(1, 2, 6)
    prod = series_mul(laurent, r2)
    assert prod.coefficient(0) == ONE
    assert prod.coefficient(2) == A


def test_series_truncation_contract():
    a = RadialSeries.build({0: 1, 1: 2}, 5)
    b = RadialSeries.build({0: 1, 2: 3}, 5)
    assert series_mul(a, b).order == 5
    with pytest.raises(ValueError):
        series_mul(a, b).coefficient(6)


def test_series_derivative():
    s = RadialSeries.build({-2: 1, 0: 1, 2: A}, 5)
    d = series_derivative(s)
    assert d.coefficient(-3) == PolyQ.const(-2)
    assert d.coefficient(1) == PolyQ.const(2) * A
    assert d.coefficient(-1) == ZERO
    zero_deriv = series_derivative(RadialSeries.constant(7, 5))
    assert zero_deriv.lowest() > zero_deriv.order


def test_pow_binomial_examples():
    base = RadialSeries.build({0: 1, 1: 1}, 2)
    inv_sq = series_pow_rational(base, -2)
    assert inv_sq.coefficient(0) == ONE
    assert inv_sq.coefficient(1) == PolyQ.const(-2)
    assert inv_sq.coefficient(2) == PolyQ.const(3)

    half = series_pow_rational(RadialSeries.build({0: 1, 2: A}, 2), Fraction(1, 2))
    assert half.coefficient(2) == PolyQ.const(Fraction(1, 2)) * A


def test_pow_rejects_bad_leading_term():
    with pytest.raises(ValueError):
        series_pow_rational(RadialSeries.build({0: 2, 1: 1}, 3), 2)
    with pytest.raises(ValueError):
        # r^(-1) to a half power would leave the Laurent ring
        series_pow_rational(RadialSeries.build({-1: 1}, 3), Fraction(1, 2))


def test_pow_against_repeated_multiplication_oracle():
    # (1 + 12 w A r^2)^(-4) expanded independently: invert by the geometric
    # series and square twice, using only add/mul
    order = 8
    coeff = PolyQ.const(12) * W * A
    y = RadialSeries.build({2: coeff}, order)
    geom = RadialSeries.constant(1, order)
    term = RadialSeries.constant(1, order)
    for _ in range(order // 2):
        term = series_mul(term, y).scale(-1)
        geom = series_add(geom, term)
    inv_sq = series_mul(geom, geom)
    oracle = series_mul(inv_sq, inv_sq)
    direct = series_pow_rational(series_add(RadialSeries.constant(1, order), y), -4)
    for k in range(order + 1):
        assert direct.coefficient(k) == oracle.coefficient(k), k
    assert direct.coefficient(2) == PolyQ.const(-48) * W * A


@st.composite
def small_series(draw):
    order = 4
    coeffs = {}
    for k in range(-1, order + 1):
        num = draw(st.integers(min_value=-4, max_value=4))
        if num:
            den = draw(st.integers(min_value=1, max_value=3))
            coeffs[k] = PolyQ.const(Fraction(num, den))
    return RadialSeries.build(coeffs, order)


@settings(max_examples=60, deadline=None)
@given(small_series(), small_series(), small_series())
def test_ring_axioms_up_to_truncation(a, b, c):
    lhs = series_mul(a, series_add(b, c))
    rhs = series_add(series_mul(a, b), series_mul(a, c))
    order = min(lhs.order, rhs.order)
    for k in range(-2, order + 1):
        assert lhs.coefficient(k) == rhs.coefficient(k)
    assoc_l = series_mul(series_mul(a, b), c)
    assoc_r = series_mul(a, series_mul(b, c))
    order = min(assoc_l.order, assoc_r.order)
    for k in range(-3, order + 1):
        assert assoc_l.coefficient(k) == assoc_r.coefficient(k)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=1, max_value=3),
    st.integers(min_value=-3, max_value=3).filter(lambda v: v != 0),
    st.integers(min_value=1, max_value=3),
)
def test_pow_round_trip(numer, denom_sign, coeff):
    alpha = Fraction(numer * denom_sign, 2)
    base = RadialSeries.build({0: 1, 1: Fraction(coeff, 2), 2: -1}, 6)
    powed = series_pow_rational(base, alpha)
    back = series_pow_rational(powed, 1 / alpha)
    for k in range(7):
        assert back.coefficient(k) == base.coefficient(k)


# -- model series ------------------------------------------------------------


def test_normalized_green_series_structure():
    g4 = normalized_green_series(4)
    assert g4.coefficient(-2) == ONE
    assert g4.coefficient(0) == PolyQ.const(12) * W * A
    assert g4.coefficient(1) == PolyQ.symbol("b0")
    for n in (4, 6, 8):
        g = normalized_green_series(n)
        assert g.coefficient(0) == PolyQ.const(4 * (n - 1)) * W * A


def test_green_series_flat_specialization():
    # dropping the mass and remainder symbols leaves the bare singular term
    g = normalized_green_series(6)
    flat_terms = {k: v for k, v in g.coeffs.items()
                  if v.symbols() <= set()}
    assert list(flat_terms) == [-4]


def test_form_norm_series_leading_terms():
    for n in (4, 6):
        s = form_norm_series(n)
        assert s.coefficient(0) == ONE
        for k in range(1, n - 2):
            assert s.coefficient(k) == ZERO
    s4 = form_norm_series(4)
    assert s4.coefficient(2) == PolyQ.const(-48) * W * A


def test_form_norm_series_without_symbols_is_one():
    # with A = b = c = e = 0 the norm collapses to the constant 1; check that
    # every coefficient beyond r^0 carries at least one formal symbol
    s = form_norm_series(4)
    for k in range(1, s.order + 1):
        coeff = s.coefficient(k)
        assert coeff.is_zero() or coeff.symbols()


def test_form_norm_series_against_sympy_oracle():
    import sympy

    n = 4
    order = 10
    r = sympy.symbols("r")
    A_s, w_s = sympy.symbols("A w")
    b = sympy.symbols("b0:%d" % order)
    c = sympy.symbols("c0:%d" % order)
    e = sympy.symbols("e0:%d" % order)
    base = 1 + 4 * (n - 1) * w_s * A_s * r ** (n - 2) + r ** (n - 1) * sum(
        bj * r**j for j, bj in enumerate(b)
    )
    model = 1 + 2 * r**n * sum(cj * r**j for j, cj in enumerate(c)) + r ** (
        2 * n
    ) * sum(ej * r**j for j, ej in enumerate(e))
    expr = base ** sympy.Rational(-2 * n, n - 2) * model
    expansion = sympy.series(expr, r, 0, order + 1).removeO().expand()
    ours = form_norm_series(n, order)
    for k in range(order + 1):
        sym_coeff = expansion.coeff(r, k)
        mine = ours.coefficient(k)
        diff = sympy.simplify(sym_coeff - sympy.sympify(_poly_to_sympy(mine)))
        assert diff == 0, f"coefficient of r^{k} disagrees"


def _poly_to_sympy(poly):
    import sympy

    total = sympy.Integer(0)
    for mono, coeff in poly.terms.items():
        term = sympy.Rational(coeff.numerator, coeff.denominator)
        for name, power in mono:
            term *= sympy.Symbol(name) ** power
    # empty monomial contributes the bare coefficient
        total += term
    return total


# -- the exact verifications -------------------------------------------------


def test_mass_derivative_n4_and_n6():
    v4 = verify_mass_derivative(4)
    assert v4.passed
    assert v4.leading_coefficient == PolyQ.const(-96) * W * A
    v6 = verify_mass_derivative(6)
    assert v6.passed
    assert v6.leading_coefficient == PolyQ.const(-240) * W * A


def test_flux_limit_n4_and_n8():
    f4 = verify_flux_limit(4)
    assert f4.passed
    assert f4.leading_coefficient == PolyQ.const(48) * A * W * W
    f8 = verify_flux_limit(8)
    assert f8.passed
    assert f8.leading_coefficient == PolyQ.const(224) * A * W * W


def test_verifications_pass_for_even_dimensions_up_to_twelve():
    for n in (4, 6, 8, 10, 12):
        assert verify_mass_derivative(n).passed
        assert verify_flux_limit(n).passed


def test_mass_derivative_without_mass_symbol():
    # specializing A = 0 removes the r^(n-3) term: the coefficient is A-linear
    v = verify_mass_derivative(6)
    assert all(MASS in {name for name, _ in mono}
               for mono in v.leading_coefficient.terms)


def test_asserted_coefficients_use_only_mass_and_volume():
    for n in (4, 6, 8):
        assert verify_mass_derivative(n).leading_coefficient.symbols() <= {MASS, SPHERE_VOL}
        assert verify_flux_limit(n).leading_coefficient.symbols() <= {MASS, SPHERE_VOL}


def test_cross_term_factor_is_immaterial():
    # the printed identity is ambiguous about a factor 2 on the cross term;
    # both variants produce identical asserted coefficients
    for n in (4, 6):
        v2 = verify_mass_derivative(n, cross_factor=2)
        v1 = verify_mass_derivative(n, cross_factor=1)
        assert v2.leading_coefficient == v1.leading_coefficient
        f2 = verify_flux_limit(n, cross_factor=2)
        f1 = verify_flux_limit(n, cross_factor=1)
        assert f2.leading_coefficient == f1.leading_coefficient
        assert v1.passed and v2.passed and f1.passed and f2.passed
