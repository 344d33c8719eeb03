import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from climshift.armodel import ar_acvf
from climshift.errors import InvalidConfig, SegmentTooShort
from climshift.likelihood import (
    ChangepointConfig,
    Objective,
    PenaltyKind,
    gaussian_loglik,
    penalty,
)
from climshift.series import TimeSeries
from conftest import ar1


@st.composite
def configs(draw, n_min=6, n_max=60):
    n = draw(st.integers(n_min, n_max))
    taus = draw(st.lists(st.integers(2, n), unique=True, max_size=5))
    return ChangepointConfig(tuple(sorted(taus)), n)


def test_config_validation_and_regimes():
    cfg = ChangepointConfig((3, 6), 8)
    assert cfg.m == 2 and cfg.boundaries == (1, 3, 6, 9)
    np.testing.assert_array_equal(cfg.regime_of(), [0, 0, 1, 1, 1, 2, 2, 2])
    np.testing.assert_array_equal(cfg.segment_lengths, [2, 3, 3])
    for bad in [(1,), (9,), (4, 4), (5, 3)]:
        with pytest.raises(InvalidConfig):
            ChangepointConfig(bad, 8)
    with pytest.raises(SegmentTooShort):
        ChangepointConfig((3, 4), 8).check_min_seg(2)


def test_penalty_examples():
    empty = ChangepointConfig((), 100)
    for kind in PenaltyKind:
        assert penalty(kind, empty) == 0.0
    assert penalty("bic", ChangepointConfig((51,), 100)) == pytest.approx(4 * np.log(100))
    assert penalty("bic", ChangepointConfig((51,), 100)) == pytest.approx(18.4207, abs=1e-4)
    assert penalty("mdl", ChangepointConfig((51,), 100)) == pytest.approx(2 * np.log(50))
    assert penalty("aic", ChangepointConfig((51,), 100)) == 8.0


def test_penalty_formulas_general():
    cfg = ChangepointConfig((20, 45, 80), 100)
    lengths = np.array([19, 25, 35, 21])
    assert penalty("mbic", cfg) == pytest.approx(9 * np.log(100) + np.sum(np.log(lengths / 100)))
    assert penalty("mdl", cfg) == pytest.approx(
        np.sum(np.log(lengths)) + 2 * np.log(3) + 2 * (np.log(45) + np.log(80)))


def test_location_dependence():
    a, b = ChangepointConfig((30,), 100), ChangepointConfig((71,), 100)
    assert penalty("mdl", a) != pytest.approx(penalty("mdl", b))
    assert penalty("bic", a) == penalty("bic", b)


@given(configs())
def test_aic_increment_is_four(cfg):
    # per additional changepoint, for m >= 1 (m = 0 carries no penalty by rule)
    if cfg.m < 2:
        return
    sub = ChangepointConfig(cfg.taus[:-1], cfg.n)
    assert penalty("aic", cfg) - penalty("aic", sub) == pytest.approx(4.0)


def test_objective_is_loglik_plus_penalty(rng):
    ts = TimeSeries(rng.normal(size=40))
    fit = Objective(ts, "mbic", "constant", 1).fit((15, 30))
    assert fit.objective == fit.minus2loglik + fit.penalty
    assert fit.penalty == penalty("mbic", fit.config)


def test_iid_closed_form(rng):
    x = rng.normal(3.0, 2.0, 37)
    m2ll, fit = gaussian_loglik(TimeSeries(x), ChangepointConfig((), 37))
    s2 = np.var(x)
    expect = -2 * np.sum(stats.norm.logpdf(x, x.mean(), np.sqrt(s2)))
    assert m2ll == pytest.approx(expect, abs=1e-10)


def test_entropy_identity():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(1000)
    m2ll, fit = gaussian_loglik(TimeSeries(x), ChangepointConfig((), 1000))
    assert m2ll / 1000 == pytest.approx(np.log(2 * np.pi) + np.log(fit.error_model.sigma2) + 1,
                                        abs=0.05)


def dense_oracle(x, fit):
    n = x.size
    g = ar_acvf(fit.error_model.phi, fit.error_model.sigma2, n - 1)
    cov = g[np.abs(np.subtract.outer(np.arange(n), np.arange(n)))]
    return -2 * stats.multivariate_normal(fit.fitted_mean, cov).logpdf(x)


@pytest.mark.parametrize("seed", range(10))
def test_matches_dense_mvn(seed):
    rng = np.random.default_rng(seed)
    x = ar1(rng, 50, 0.5)
    x[25:] += 1.0
    for kind, cfg in [("constant", ()), ("constant", (26,)), ("trend", (10, 26))]:
        m2ll, fit = gaussian_loglik(TimeSeries(x), ChangepointConfig(cfg, 50), kind, p=1)
        assert m2ll == pytest.approx(dense_oracle(x, fit), abs=1e-6)


def test_ar2_matches_dense_mvn():
    rng = np.random.default_rng(5)
    x = ar1(rng, 50, 0.4) + np.r_[np.zeros(20), np.ones(30)]
    m2ll, fit = gaussian_loglik(TimeSeries(x), ChangepointConfig((21,), 50), "constant", p=2)
    assert m2ll == pytest.approx(dense_oracle(x, fit), abs=1e-6)


@given(st.integers(0, 2**31), st.integers(0, 1))
def test_adding_changepoint_never_hurts(seed, p):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=30)
    ts = TimeSeries(x)
    base, _ = gaussian_loglik(ts, ChangepointConfig((10,), 30), p=p)
    more, _ = gaussian_loglik(ts, ChangepointConfig((10, 20), 30), p=p)
    assert more <= base + 1e-6


def test_fast_path_matches_general(rng):
    ts = TimeSeries(rng.normal(size=60))
    obj = Objective(ts, "bic")
    for taus in [(), (20,), (7, 33, 50)]:
        m2ll, _ = gaussian_loglik(ts, ChangepointConfig(taus, 60))
        assert obj.minus2loglik(taus) == pytest.approx(m2ll, abs=1e-9)


def test_segment_means_and_offsets(rng):
    x = np.r_[np.zeros(10), np.full(10, 5.0)] + rng.normal(0, 0.01, 20)
    _, fit = gaussian_loglik(TimeSeries(x), ChangepointConfig((11,), 20))
    np.testing.assert_allclose(fit.segment_means(), [0, 5], atol=0.02)
    assert fit.offsets[0] == 0.0
