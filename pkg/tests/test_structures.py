import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markovchaos.exactpoly import MultiPoly, basis_element, parse_poly, rational
from markovchaos.structures import (
    JacobiCoordinate,
    LaguerreCoordinate,
    OUCoordinate,
    ProductStructure,
    apply_L,
    carre_du_champ,
    coordinate_from_dict,
    gradient_form,
    integrate,
    moment,
)
from markovchaos.verify import random_poly, random_structure

STRUCTURES = [
    ProductStructure.ou(1),
    ProductStructure.laguerre("-1/2", 1),
    ProductStructure.laguerre("3/2", 1),
    ProductStructure.jacobi("1/2", "1/2", 1),
    ProductStructure.jacobi("1/3", "2", 1),
]


def test_ou_h2_example():
    S = ProductStructure.ou(1)
    h2 = parse_poly("x1^2 - 1")
    assert apply_L(S, h2) == h2.scale(-2)
    assert carre_du_champ(S, h2) == parse_poly("4*x1^2")
    assert integrate(S, h2 * h2) == 2
    assert moment(S, h2, 4) == 60


@pytest.mark.parametrize("S", STRUCTURES, ids=lambda s: str(s.to_spec()))
def test_basis_elements_are_eigenfunctions(S):
    for k in range(7):
        e = basis_element((k,), S.families)
        assert apply_L(S, e) == e.scale(-S.coords[0].eigenvalue(k))


@pytest.mark.parametrize("S", STRUCTURES, ids=lambda s: str(s.to_spec()))
def test_basis_is_orthogonal(S):
    es = [basis_element((k,), S.families) for k in range(6)]
    for i in range(6):
        for j in range(i):
            assert integrate(S, es[i] * es[j]) == 0
        assert integrate(S, es[i] * es[i]) > 0


def _density(coord):
    if isinstance(coord, OUCoordinate):
        return lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi), -math.inf, math.inf
    if isinstance(coord, LaguerreCoordinate):
        k = float(coord.shape)
        return lambda x: x ** (k - 1) * math.exp(-x) / math.gamma(k), 0, math.inf
    a, b = float(coord.alpha), float(coord.beta)
    norm = math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return lambda x: x ** (a - 1) * (1 - x) ** (b - 1) / norm, 0, 1


@pytest.mark.parametrize("S", STRUCTURES, ids=lambda s: str(s.to_spec()))
def test_moments_match_quadrature(S):
    quad = pytest.importorskip("scipy.integrate").quad
    dens, lo, hi = _density(S.coords[0])
    for k in range(7):
        exact = float(integrate(S, MultiPoly.univariate([0] * k + [1])))
        num = quad(lambda x: x ** k * dens(x), lo, hi, limit=200)[0]
        assert exact == pytest.approx(num, rel=1e-7, abs=1e-9)


def test_invariance_and_symmetry():
    rng = random.Random(1)
    for kind in ["ou", "laguerre:0", "laguerre:3/2", "jacobi", "mixed"]:
        for _ in range(10):
            S = random_structure(rng, kind)
            p = random_poly(rng, S.dim, 4)
            q = random_poly(rng, S.dim, 3)
            assert integrate(S, apply_L(S, p)) == 0
            assert integrate(S, p * apply_L(S, q)) == integrate(S, q * apply_L(S, p))
            assert integrate(S, carre_du_champ(S, p)) >= 0


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_gamma_equals_gradient_form(seed):
    rng = random.Random(seed)
    S = random_structure(rng, "mixed")
    p = random_poly(rng, S.dim, 3)
    q = random_poly(rng, S.dim, 3)
    assert carre_du_champ(S, p, q) == gradient_form(S, p, q)


def test_constants_annihilated():
    S = ProductStructure.from_spec([{"type": "ou"}, {"type": "jacobi", "alpha": "1", "beta": "2"}])
    assert apply_L(S, MultiPoly.constant(2, 5)).is_zero()


def test_spectral_gap():
    assert ProductStructure.ou(2).spectral_gap == 1
    assert ProductStructure.jacobi("1/2", "1/2").spectral_gap == 1
    assert ProductStructure.jacobi(2, 3).spectral_gap == 5


@pytest.mark.parametrize("entry", [
    {"type": "ou", "nu": "1"},
    {"type": "laguerre"},
    {"type": "jacobi", "alpha": "0", "beta": "1"},
    {"type": "laguerre", "nu": "-1"},
    {"type": "heat"},
    {"type": "laguerre", "nu": 0.5},
])
def test_coordinate_validation(entry):
    with pytest.raises((ValueError, TypeError)):
        coordinate_from_dict(entry)


def test_spec_round_trip():
    spec = [{"type": "ou"}, {"type": "laguerre", "nu": "1/2"}, {"type": "jacobi", "alpha": "1/2", "beta": "3"}]
    S = ProductStructure.from_spec(spec)
    assert ProductStructure.from_spec(S.to_spec()) == S
    assert S.to_spec() == spec


def test_dimension_checked():
    with pytest.raises(ValueError):
        apply_L(ProductStructure.ou(2), parse_poly("x1", 1))
