import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from climshift.errors import (
    FewerThanTwoCycles,
    InvalidSeries,
    LagTooLarge,
    LengthMismatch,
    NonPositiveVariance,
    PartialCycle,
    PeriodMismatch,
    SampleSizeOutOfRange,
)
from climshift.series import (
    TimeSeries,
    acf,
    difference,
    normality_test,
    seasonal_stats,
    standardize,
)
from conftest import ar1

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_rejects_missing_and_short():
    with pytest.raises(InvalidSeries):
        TimeSeries([1.0, np.nan, 2.0])
    with pytest.raises(InvalidSeries):
        TimeSeries([1.0])
    with pytest.raises(InvalidSeries):
        TimeSeries([1.0, 2.0], period=0)


def test_values_are_read_only():
    ts = TimeSeries([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        ts.values[0] = 5.0


def test_seasons_and_labels():
    ts = TimeSeries(np.arange(24.0), period=12, start_year=1950)
    assert ts.seasons[0] == 1 and ts.seasons[11] == 12 and ts.seasons[12] == 1
    assert ts.time_label(1) == 1950 and ts.time_label(13) == 1951


def test_seasonal_stats_hand_example():
    st_ = seasonal_stats(TimeSeries([1.0, 2.0, 3.0]))
    assert st_.means[0] == pytest.approx(2.0)
    assert st_.std_devs[0] ** 2 == pytest.approx(1.0)


def test_seasonal_stats_errors():
    with pytest.raises(NonPositiveVariance):
        seasonal_stats(TimeSeries(np.full(36, 5.0), period=12))
    with pytest.raises(FewerThanTwoCycles):
        seasonal_stats(TimeSeries(np.arange(12.0), period=12))
    with pytest.raises(PartialCycle):
        seasonal_stats(TimeSeries(np.arange(30.0), period=12))


def test_standardize_hand_example():
    ts = TimeSeries([1.0, 2.0, 3.0])
    z = standardize(ts, seasonal_stats(ts))
    np.testing.assert_allclose(z.values, [-1.0, 0.0, 1.0])


def test_standardize_period_mismatch(rng):
    a = TimeSeries(rng.standard_normal(24), period=12)
    b = TimeSeries(rng.standard_normal(24), period=2)
    with pytest.raises(PeriodMismatch):
        standardize(a, seasonal_stats(b))


@given(st.integers(1, 6), st.integers(2, 8), st.integers(0, 2**31))
def test_standardized_seasonal_means_are_zero(period, cycles, seed):
    x = np.random.default_rng(seed).normal(10, 3, period * cycles)
    ts = TimeSeries(x, period=period)
    z = standardize(ts, seasonal_stats(ts))
    np.testing.assert_allclose(seasonal_stats(z).means, 0.0, atol=1e-12)


def test_restandardize_is_idempotent_up_to_scale(rng):
    ts = TimeSeries(rng.normal(5, 2, 60), period=12)
    z1 = standardize(ts, seasonal_stats(ts))
    z2 = standardize(z1, seasonal_stats(z1))
    np.testing.assert_allclose(z2.values, z1.values, atol=1e-12)


def test_acf_lag0_uses_n_divisor(rng):
    ts = TimeSeries(rng.standard_normal(120), period=12)
    z = standardize(ts, seasonal_stats(ts))
    res = acf(z, 5)
    d = 10
    assert res.correlations[0] == pytest.approx(np.sum(z.values**2) / z.n, abs=1e-15)
    assert res.correlations[0] == pytest.approx(1.0, abs=2 / np.sqrt(d))
    assert res.white_noise_band == pytest.approx(1.96 / np.sqrt(120))


def test_acf_lag_too_large():
    with pytest.raises(LagTooLarge):
        acf(TimeSeries([0.0, 1.0, -1.0]), 3)


def test_acf_white_noise(rng):
    x = rng.standard_normal(10_000)
    ts = TimeSeries(x)
    z = standardize(ts, seasonal_stats(ts))
    assert np.all(np.abs(acf(z, 10).correlations[1:]) < 0.05)


@pytest.mark.parametrize("phi", [-0.5, 0.0, 0.5, 0.9])
def test_acf_ar1(phi):
    rng = np.random.default_rng(int(100 * (phi + 1)))
    ts = TimeSeries(ar1(rng, 20_000, phi))
    z = standardize(ts, seasonal_stats(ts))
    r = acf(z, 3).correlations
    assert r[1] == pytest.approx(phi, abs=0.03)
    if phi == 0.5:
        np.testing.assert_allclose(r[1:4], 0.5 ** np.arange(1, 4), atol=0.05)


@given(arrays(float, st.integers(5, 60), elements=finite))
def test_acf_reversal_symmetry(x):
    ts = TimeSeries(x)
    a = acf(ts, min(4, ts.n - 1)).correlations
    b = acf(ts.reversed(), min(4, ts.n - 1)).correlations
    np.testing.assert_allclose(a, b, atol=1e-12 * max(1.0, np.max(np.abs(a))))


@given(st.integers(2, 50), st.integers(0, 2**31))
def test_difference_inverts(n, seed):
    rng = np.random.default_rng(seed)
    a, b = TimeSeries(rng.normal(size=n)), TimeSeries(rng.normal(size=n))
    np.testing.assert_allclose(difference(a, b).values + b.values, a.values, atol=1e-12)


def test_difference_errors_and_identity(rng):
    a = TimeSeries(rng.normal(size=24), period=12, start_year=1900)
    assert np.all(difference(a, a).values == 0)
    with pytest.raises(LengthMismatch):
        difference(a, TimeSeries(rng.normal(size=12), period=12))
    with pytest.raises(PeriodMismatch):
        difference(a, TimeSeries(rng.normal(size=24), period=1))
    with pytest.raises(LengthMismatch):
        difference(a, TimeSeries(rng.normal(size=24), period=12, start_year=1901))


def test_difference_removes_shared_trend(rng):
    t = np.arange(100.0)
    a = TimeSeries(0.03 * t + rng.normal(size=100))
    b = TimeSeries(0.03 * t + 5.0)
    d = difference(a, b).values
    assert abs(np.polyfit(t, d, 1)[0]) < 0.02


def test_normality_calibration_and_power():
    rng = np.random.default_rng(7)
    p_norm = np.array([normality_test(rng.standard_normal(500))[1] for _ in range(300)])
    assert 0.02 < np.mean(p_norm < 0.05) < 0.09
    p_exp = np.array([normality_test(rng.exponential(size=500))[1] for _ in range(200)])
    assert np.mean(p_exp < 0.01) > 0.99


def test_normality_size_limits():
    with pytest.raises(SampleSizeOutOfRange):
        normality_test([1.0, 2.0])
    with pytest.raises(SampleSizeOutOfRange):
        normality_test(np.zeros(5001))
