import random

import gmpy2
import pytest

from markovchaos.exactpoly import basis_element, hermite, parse_poly, rational
from markovchaos.spectral import (
    annihilator_vanishes,
    chaos_check,
    chaos_threshold,
    decompose,
    doubled_index_bound,
    eigenvalue_of,
    general_principle,
    jacobi_gap_inequality_holds,
    project,
    project_operator_formula,
    spectrum_upto,
)
from markovchaos.structures import ProductStructure, apply_L, integrate
from markovchaos.verify import random_eigenfunction, random_poly, random_structure


def test_h2_squared_decomposition():
    S = ProductStructure.ou(1)
    dec = decompose(S, hermite(2) ** 2)
    assert dec.support == [0, 2, 4]
    assert dec[0] == 2
    assert dec[2] == hermite(2).scale(4)
    assert dec[4] == hermite(4)
    for eta in dec.support:
        assert project_operator_formula(S, hermite(2) ** 2, eta, dec.support) == dec[eta]


def test_h3_chaos_report():
    rep = chaos_check(ProductStructure.ou(1), hermite(3))
    assert rep.eigenvalue == 3
    assert rep.square_support == [0, 2, 4, 6]
    assert rep.max_support == 6
    assert rep.is_chaotic
    assert rep.to_dict()["max_support"] == "6"


def test_non_eigenfunction_report():
    S = ProductStructure.ou(1)
    rep = chaos_check(S, parse_poly("x1^2 + x1"))
    assert not rep.is_chaotic and rep.reason == "not an eigenfunction"
    assert eigenvalue_of(S, parse_poly("x1^2 + x1")) is None
    with pytest.raises(ValueError):
        eigenvalue_of(S, parse_poly("0"))


def test_jacobi_example():
    S = ProductStructure.jacobi("1/2", "1/2")
    X = basis_element((2,), S.families)
    rep = chaos_check(S, X)
    assert rep.eigenvalue == 4
    assert rep.square_support == [0, 16]
    assert rep.threshold == 16 == doubled_index_bound([2], "1/2", "1/2")


def test_threshold_is_doubled_for_hermite_laguerre():
    for S in [ProductStructure.ou(3), ProductStructure.laguerre("1/2", 2)]:
        for lam in range(1, 6):
            assert chaos_threshold(S, lam) == 2 * lam


def test_threshold_rejects_non_eigenvalue():
    with pytest.raises(ValueError):
        chaos_threshold(ProductStructure.jacobi(1, 1), 3)


def test_doubled_index_bound_brute_force():
    # direct search over all index pairs sharing the eigenvalue
    a, b = rational("1/3"), rational("1/2")
    s = a + b
    ev = lambda k: k * (k + s - 1)  # noqa: E731
    for i in range(5):
        for j in range(5):
            lam = ev(i) + ev(j)
            best = max(ev(2 * p) + ev(2 * q) for p in range(9) for q in range(9) if ev(p) + ev(q) == lam)
            assert doubled_index_bound([i, j], a, b) == best


def test_spectrum_upto():
    assert spectrum_upto(ProductStructure.ou(2), 3) == [0, 1, 2, 3]
    assert spectrum_upto(ProductStructure.jacobi(1, 1), 7) == [0, 2, 6]
    assert spectrum_upto(ProductStructure.jacobi(1, 1, 2), 7) == [0, 2, 4, 6]


def test_jacobi_gap_inequality_boundary():
    assert all(jacobi_gap_inequality_holds("1/2", "1/2", p) for p in range(8))
    assert not all(jacobi_gap_inequality_holds(1, 1, p) for p in range(8))


def test_random_eigenfunctions_chaotic_and_annihilated():
    rng = random.Random(5)
    for kind in ["ou", "laguerre:-1/2", "jacobi", "mixed"]:
        for _ in range(15):
            S = random_structure(rng, kind)
            X, lam = random_eigenfunction(rng, S)
            assert eigenvalue_of(S, X) == lam
            assert chaos_check(S, X).is_chaotic
            assert annihilator_vanishes(S, X)


def test_projection_properties():
    rng = random.Random(11)
    for kind in ["ou", "laguerre:0", "jacobi", "mixed"]:
        for _ in range(10):
            S = random_structure(rng, kind, d=2)
            p = random_poly(rng, 2, 4)
            dec = decompose(S, p)
            assert dec.reconstruct() == p
            for eta in dec.support:
                comp = project(S, p, eta)
                assert project(S, comp, eta) == comp
                assert apply_L(S, comp) == comp.scale(-eta)
                # the residual is orthogonal to the component
                assert integrate(S, (p - comp) * comp) == 0
            assert project(S, p, 1000).is_zero()


def test_operator_formula_validation():
    S = ProductStructure.ou(1)
    with pytest.raises(ValueError):
        project_operator_formula(S, hermite(2), 2, [0, 2, 2])
    with pytest.raises(ValueError):
        project_operator_formula(S, hermite(2), 3, [0, 2])


def test_general_principle_h2_squared():
    chk = general_principle(ProductStructure.ou(1), hermite(2) ** 2, 4)
    assert (chk.I2, chk.I1, chk.c) == (192, 80, gmpy2.mpq(1, 2))
    assert chk.sandwich_ok


def test_general_principle_rejects_small_eta():
    with pytest.raises(ValueError):
        general_principle(ProductStructure.ou(1), hermite(2) ** 2, 3)


def test_general_principle_single_eigenspace():
    chk = general_principle(ProductStructure.ou(1), hermite(3), 3)
    assert chk.c is None and chk.I1 == 0 and chk.I2 == 0 and chk.sandwich_ok


@pytest.mark.parametrize("kind", ["ou", "laguerre:-1/2", "laguerre:3/2", "jacobi", "mixed"])
def test_reconstruction_200_per_structure(kind):
    rng = random.Random(kind)
    for _ in range(200):
        S = random_structure(rng, kind)
        p = random_poly(rng, S.dim, rng.randint(0, 4))
        assert decompose(S, p).reconstruct() == p


def test_zero_polynomial_decomposition():
    S = ProductStructure.ou(2)
    dec = decompose(S, parse_poly("0", 2))
    assert dec.components == {} and dec.max_support is None
    assert project(S, parse_poly("0", 2), 1).is_zero()
