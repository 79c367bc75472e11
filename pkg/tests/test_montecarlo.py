import math

import numpy as np
import pytest

from markovchaos.exactpoly import parse_poly
from markovchaos.fourthmoment import BetaTarget, GammaTarget, GaussianTarget
from markovchaos.montecarlo import (
    BetaLaw,
    Experiment,
    GammaLaw,
    HomogeneousSumSpec,
    NormalLaw,
    SampleConfig,
    empirical_moments,
    evaluate_sequence,
    gamma_variates,
    iter_chunks,
    ks_statistic,
    law_from_dict,
    run_experiment,
    sample,
    sample_chunk,
    sequence_values,
)
from markovchaos.special import betainc, gammainc_lower, normal_cdf
from markovchaos.structures import ProductStructure, moment

scipy_special = pytest.importorskip("scipy.special")
scipy_stats = pytest.importorskip("scipy.stats")


# -- special functions against scipy -------------------------------------------

def test_incomplete_gamma_matches_scipy():
    rng = np.random.default_rng(0)
    for a, x in zip(rng.uniform(0.05, 30, 400), rng.uniform(0, 60, 400)):
        assert gammainc_lower(a, x) == pytest.approx(scipy_special.gammainc(a, x), abs=1e-12)


def test_incomplete_beta_matches_scipy():
    rng = np.random.default_rng(1)
    for a, b, x in zip(rng.uniform(0.05, 20, 400), rng.uniform(0.05, 20, 400), rng.uniform(0, 1, 400)):
        assert betainc(a, b, x) == pytest.approx(scipy_special.betainc(a, b, x), abs=1e-12)


def test_special_edge_cases():
    assert gammainc_lower(2.0, 0.0) == 0.0
    assert gammainc_lower(2.0, math.inf) == 1.0
    assert betainc(2.0, 3.0, 0.0) == 0.0 and betainc(2.0, 3.0, 1.0) == 1.0
    assert normal_cdf(0.0) == 0.5
    with pytest.raises(ValueError):
        gammainc_lower(0.0, 1.0)
    with pytest.raises(ValueError):
        betainc(1.0, -1.0, 0.5)


# -- samplers ------------------------------------------------------------------

@pytest.mark.parametrize("shape", [0.3, 0.5, 1.0, 2.5, 9.0])
def test_gamma_sampler_distribution(shape):
    rng = np.random.default_rng(42)
    draws = gamma_variates(rng, shape, 40_000)
    assert draws.min() > 0
    res = scipy_stats.kstest(draws, scipy_stats.gamma(shape).cdf)
    assert res.pvalue > 1e-3
    assert draws.mean() == pytest.approx(shape, abs=5 * math.sqrt(shape / 40_000))


def test_beta_law_distribution():
    cfg = SampleConfig((BetaLaw(0.5, 2.0),), 40_000, seed=9)
    draws = sample(cfg)[:, 0]
    assert scipy_stats.kstest(draws, scipy_stats.beta(0.5, 2.0).cdf).pvalue > 1e-3


def test_centred_gamma_law():
    draws = sample(SampleConfig((GammaLaw(1.0, centered=True),), 40_000, seed=3))[:, 0]
    assert abs(draws.mean()) < 5 / math.sqrt(40_000)
    assert draws.var() == pytest.approx(1.0, abs=0.05)


def test_law_validation():
    with pytest.raises(ValueError):
        GammaLaw(0.0)
    with pytest.raises(ValueError):
        BetaLaw(1.0, 0.0)
    with pytest.raises(ValueError):
        law_from_dict({"law": "normal", "sigma": 2})
    assert law_from_dict({"law": "gamma", "shape": 2}) == GammaLaw(2.0)


# -- determinism and chunking --------------------------------------------------

def test_sampling_is_deterministic():
    cfg = SampleConfig((NormalLaw(), GammaLaw(1.5)), 5000, seed=123, dim=6, chunk_size=700)
    np.testing.assert_array_equal(sample(cfg), sample(cfg))


def test_chunks_are_independent_of_iteration_order():
    cfg = SampleConfig((NormalLaw(),), 5000, seed=5, dim=3, chunk_size=1000)
    forward = list(iter_chunks(cfg))
    backward = [sample_chunk(cfg, i) for i in reversed(range(cfg.n_chunks))][::-1]
    for a, b in zip(forward, backward):
        np.testing.assert_array_equal(a, b)
    assert sum(len(c) for c in forward) == 5000


def test_seed_and_stream_change_output():
    base = SampleConfig((NormalLaw(),), 100, seed=1)
    assert not np.array_equal(sample(base), sample(SampleConfig((NormalLaw(),), 100, seed=2)))
    assert not np.array_equal(sample(base), sample(SampleConfig((NormalLaw(),), 100, seed=1, stream=4)))


def test_seed_range_checked():
    with pytest.raises(ValueError):
        SampleConfig((NormalLaw(),), 10, seed=2 ** 64)
    SampleConfig((NormalLaw(),), 10, seed=2 ** 64 - 1)


def test_report_independent_of_workers():
    fam = HomogeneousSumSpec("paired-product")
    base = dict(family=fam, laws=(NormalLaw(),), n_grid=(5, 50), sample_count=6000, seed=77, chunk_size=1000)
    one = run_experiment(Experiment(**base, workers=1))
    three = run_experiment(Experiment(**base, workers=3))
    assert one.to_csv() == three.to_csv()


# -- families ------------------------------------------------------------------

def test_family_evaluation():
    x = np.arange(1.0, 13.0).reshape(2, 6)
    paired = evaluate_sequence(HomogeneousSumSpec("paired-product"), x, 3)
    np.testing.assert_allclose(paired, [(1 * 2 + 3 * 4 + 5 * 6) / math.sqrt(3), (7 * 8 + 9 * 10 + 11 * 12) / math.sqrt(3)])
    cubic = evaluate_sequence(HomogeneousSumSpec("paired-product", degree=3), x, 2)
    np.testing.assert_allclose(cubic, [(6 + 120) / math.sqrt(2), (7 * 8 * 9 + 10 * 11 * 12) / math.sqrt(2)])
    single = evaluate_sequence(HomogeneousSumSpec("single-term"), x, 100)
    np.testing.assert_allclose(single, [2, 56])
    table = HomogeneousSumSpec("table", table=(((1, 3), 0.5), ((2, 6), -1.0)))
    np.testing.assert_allclose(evaluate_sequence(table, x), [0.5 * 3 - 12, 0.5 * 63 - 96])
    poly = HomogeneousSumSpec("polynomial", poly=parse_poly("x1^2 - 1", 1))
    np.testing.assert_allclose(evaluate_sequence(poly, x), [0, 48])


@pytest.mark.parametrize("kwargs", [
    {"kind": "quadratic"},
    {"kind": "table", "table": (((2, 1), 1.0),)},
    {"kind": "table", "table": (((1,), 1.0),)},
    {"kind": "table"},
    {"kind": "polynomial"},
    {"kind": "paired-product", "degree": 0},
])
def test_family_validation(kwargs):
    with pytest.raises(ValueError):
        HomogeneousSumSpec(**kwargs)


def test_family_needs_enough_columns():
    with pytest.raises(IndexError):
        evaluate_sequence(HomogeneousSumSpec("paired-product"), np.ones((3, 4)), 3)


# -- estimates -----------------------------------------------------------------

def test_empirical_moments_and_se():
    v = np.array([1.0, 2.0, 3.0, 4.0])
    m = empirical_moments(v, (1, 2))
    assert m[1].value == 2.5
    assert m[2].value == 7.5
    assert m[1].se == pytest.approx(np.std(v, ddof=1) / 2)


def test_ks_matches_scipy():
    rng = np.random.default_rng(4)
    v = rng.standard_normal(3000)
    assert ks_statistic(v, GaussianTarget()) == pytest.approx(scipy_stats.kstest(v, "norm").statistic, abs=1e-12)
    g = rng.gamma(2.5, size=2000)
    assert ks_statistic(g, GammaTarget("5/2")) == pytest.approx(
        scipy_stats.kstest(g, scipy_stats.gamma(2.5).cdf).statistic, abs=1e-12)
    b = rng.beta(0.5, 0.5, size=2000)
    assert ks_statistic(b, BetaTarget("1/2", "1/2")) == pytest.approx(
        scipy_stats.kstest(b, scipy_stats.beta(0.5, 0.5).cdf).statistic, abs=1e-12)


def _agreement_hits(structure, X, sample_count, runs=100):
    exact = {k: float(moment(structure, X, k)) for k in range(1, 5)}
    fam = HomogeneousSumSpec("polynomial", poly=X)
    hits = {k: 0 for k in exact}
    for seed in range(runs):
        cfg = SampleConfig.from_structure(structure, sample_count, seed)
        m = empirical_moments(evaluate_sequence(fam, sample(cfg)), tuple(exact))
        for k in exact:
            hits[k] += abs(m[k].value - exact[k]) <= 4 * m[k].se
    return hits


HEAVY_TAIL = pytest.mark.xfail(
    strict=False,
    reason="X^4 is heavy tailed; the sample SE is biased low at this N so 4*SE covers slightly under 99%",
)


@pytest.mark.parametrize("structure,text", [
    (ProductStructure.ou(2), "x1 - 2*x2 + 1/3"),
    (ProductStructure.laguerre("1/2", 2), "x1 + x2 - 3"),
    (ProductStructure.jacobi("1/2", "3/2", 2), "x1 - x2 + x1*x2"),
    pytest.param(ProductStructure.ou(2), "x1*x2 + 1/2*x1^2 - 1/2", marks=HEAVY_TAIL),
    pytest.param(ProductStructure.laguerre("1/2", 2), "x1*x2 - 3/2*x1 - 3/2*x2 + 9/4", marks=HEAVY_TAIL),
])
def test_exact_empirical_agreement(structure, text):
    hits = _agreement_hits(structure, parse_poly(text, structure.dim), 20_000)
    assert all(h >= 99 for h in hits.values()), hits


@pytest.mark.parametrize("structure,text", [
    (ProductStructure.ou(2), "x1*x2 + 1/2*x1^2 - 1/2"),
    (ProductStructure.laguerre("1/2", 2), "x1*x2 - 3/2*x1 - 3/2*x2 + 9/4"),
])
def test_heavy_tailed_moments_unbiased_at_large_n(structure, text):
    X = parse_poly(text, structure.dim)
    values = evaluate_sequence(HomogeneousSumSpec("polynomial", poly=X),
                               sample(SampleConfig.from_structure(structure, 2_000_000, 1)))
    m = empirical_moments(values)
    for k in range(1, 5):
        assert abs(m[k].value - float(moment(structure, X, k))) <= 4 * m[k].se


def test_experiment_report_shape():
    exp = Experiment(HomogeneousSumSpec("paired-product"), (NormalLaw(),), (4, 40), 3000, seed=1)
    rep = run_experiment(exp)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,m2,m2_se,m3,m3_se,m4,m4_se,statistic,ks"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [4, 40]
    d = rep.to_dict()
    assert isinstance(d["rows"][0]["m4"], float)
    assert set(d["summary"]) == {"statistic_decreased", "ks_decreased", "final_abs_statistic", "final_ks"}
    np.testing.assert_array_equal(sequence_values(exp, 4), sequence_values(exp, 4))
