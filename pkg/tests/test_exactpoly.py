from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovchaos.exactpoly import (
    AffineArgument,
    DimensionError,
    Hermite,
    Jacobi,
    Laguerre,
    MultiPoly,
    PolyParseError,
    basis_element,
    compose,
    evaluate,
    format_poly,
    hermite,
    jacobi,
    jacobi_rodrigues,
    laguerre,
    laguerre_rodrigues,
    parse_poly,
    product_basis_expand,
    product_basis_reconstruct,
    rational,
)
from markovchaos.structures import JacobiCoordinate, LaguerreCoordinate, OUCoordinate

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@st.composite
def polys(draw, dim=None, max_deg=4):
    d = dim or draw(st.integers(1, 3))
    n = draw(st.integers(0, 5))
    terms = {}
    for _ in range(n):
        exp = tuple(draw(st.lists(st.integers(0, max_deg), min_size=d, max_size=d)))
        terms[exp] = draw(fractions)
    return MultiPoly(d, terms)


def test_rational_rejects_floats():
    with pytest.raises(TypeError):
        rational(0.5)
    with pytest.raises(TypeError):
        rational(True)
    assert rational("-3/6") == Fraction(-1, 2)
    assert rational(Fraction(2, 4)) == rational("1/2")


def test_basic_arithmetic():
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    p = (x + y) ** 2
    assert p == x * x + 2 * x * y + y * y
    assert p.degree == 2
    assert (p - p).is_zero()
    assert (p - p).degree == -1
    assert p.coefficient((1, 1)) == 2


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        MultiPoly.variable(2, 0) + MultiPoly.variable(3, 0)


def test_zero_coefficients_dropped():
    p = MultiPoly(1, {(1,): 0, (0,): 2})
    assert p.terms == {(0,): 2}


@given(polys(dim=2), polys(dim=2), polys(dim=2))
@settings(max_examples=60, deadline=None)
def test_ring_axioms(p, q, r):
    assert p * (q + r) == p * q + p * r
    assert (p * q) * r == p * (q * r)
    assert p + q == q + p


@given(polys(dim=2), polys(dim=2))
@settings(max_examples=60, deadline=None)
def test_leibniz_rule(p, q):
    for i in range(2):
        assert (p * q).derivative(i) == p.derivative(i) * q + p * q.derivative(i)


@given(polys())
@settings(max_examples=100, deadline=None)
def test_text_round_trip(p):
    assert parse_poly(format_poly(p), p.dim) == p


def test_format_example():
    p = parse_poly("x3 + x1 - 1/4 + 3/2*x1^2*x2", 3)
    assert p.to_text() == "3/2*x1^2*x2 + x1 + x3 - 1/4"


@pytest.mark.parametrize("text,pos", [("x1^2 - * 3", 7), ("2*y1", 2), ("x1^", 3), ("1/0", None)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises((PolyParseError, ValueError, ZeroDivisionError)) as info:
        parse_poly(text)
    if pos is not None:
        assert isinstance(info.value, PolyParseError)
        assert info.value.position == pos


def test_parse_respects_dim():
    with pytest.raises((DimensionError, ValueError)):
        parse_poly("x3", 2)


def test_evaluate_exact_and_vectorised():
    p = parse_poly("x1^2*x2 - 1/2*x2 + 3", 2)
    assert evaluate(p, [rational(2), rational("1/3")]) == 4 * rational("1/3") - rational("1/6") + 3
    xs = np.array([0.5, 1.0, -2.0])
    ys = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(evaluate(p, [xs, ys]), xs ** 2 * ys - 0.5 * ys + 3)


def test_compose():
    outer = MultiPoly.univariate([1, 0, 1])  # 1 + t^2
    inner = parse_poly("x1 + x2", 2)
    assert compose(outer, inner) == inner * inner + 1


def test_hermite_values():
    assert hermite(2) == MultiPoly.univariate([-1, 0, 1])
    assert hermite(3) == MultiPoly.univariate([0, -3, 0, 1])
    assert hermite(4) == MultiPoly.univariate([3, 0, -6, 0, 1])


def test_hermite_matches_numpy():
    from numpy.polynomial import hermite_e

    for n in range(8):
        ref = hermite_e.herme2poly([0] * n + [1])
        got = [float(c) for c in hermite(n).univariate_coefficients()]
        np.testing.assert_allclose(got, ref)


@pytest.mark.parametrize("nu", ["0", "-1/2", "3/2", "5"])
def test_laguerre_recurrence_matches_rodrigues(nu):
    for n in range(7):
        assert laguerre(n, rational(nu)) == laguerre_rodrigues(n, rational(nu))


@pytest.mark.parametrize("a,b", [("0", "0"), ("-1/2", "-1/2"), ("1", "-1/3"), ("2", "5/2")])
def test_jacobi_recurrence_matches_rodrigues(a, b):
    for n in range(7):
        assert jacobi(n, rational(a), rational(b)) == jacobi_rodrigues(n, rational(a), rational(b))


def test_families_match_scipy():
    sp = pytest.importorskip("scipy.special")
    xs = np.linspace(-0.9, 0.9, 7)
    for n in range(6):
        np.testing.assert_allclose(evaluate(laguerre(n, rational("3/2")), [xs + 1]),
                                   sp.eval_genlaguerre(n, 1.5, xs + 1), rtol=1e-12)
        np.testing.assert_allclose(evaluate(jacobi(n, rational("1/2"), rational("-1/3")), [xs]),
                                   sp.eval_jacobi(n, 0.5, -1 / 3, xs), rtol=1e-12, atol=1e-12)


def test_family_objects():
    assert Hermite().poly(3) == hermite(3)
    assert Laguerre(rational(1)).poly(2) == laguerre(2, rational(1))
    fam = AffineArgument(Jacobi(rational(0), rational(0)), rational(-2), rational(1))
    # P_1(1 - 2x) = 1 - 2x for Legendre
    assert fam.poly(1) == MultiPoly.univariate([1, -2])


@given(polys(max_deg=3))
@settings(max_examples=60, deadline=None)
def test_basis_expansion_round_trip(p):
    coords = [OUCoordinate(), LaguerreCoordinate(rational("1/2")), JacobiCoordinate(rational("1/3"), rational("1/2"))]
    fams = tuple(c.family for c in coords[: p.dim])
    coeffs = product_basis_expand(p, fams)
    assert product_basis_reconstruct(coeffs, fams) == p


def test_basis_element_is_tensor_product():
    fams = (Hermite(), Hermite())
    e = basis_element((2, 1), fams)
    assert e == parse_poly("x1^2*x2 - x2", 2)


def test_evaluation_examples():
    assert evaluate(hermite(2), [rational(2)]) == 3
    assert evaluate(parse_poly("x1*x2", 2), [rational(3), rational("1/3")]) == 1
    assert evaluate(laguerre(1, rational(0)), [rational(1)]) == 0


def test_basis_round_trip_200_cases():
    import random

    from markovchaos.verify import random_poly

    rng = random.Random(2024)
    coords = [OUCoordinate(), LaguerreCoordinate(rational("-1/2")), JacobiCoordinate(rational("1/4"), rational("3/2"))]
    for _ in range(200):
        d = rng.randint(1, 3)
        fams = tuple(rng.choice(coords).family for _ in range(d))
        p = random_poly(rng, d, rng.randint(0, 6), terms=5)
        assert product_basis_reconstruct(product_basis_expand(p, fams), fams) == p
