"""Time-series container and seasonal diagnostics.

Observations are indexed ``t = 1..N``; the season of observation ``t`` is
``((t - 1) mod T) + 1`` for a period ``T`` (``T = 1`` for annual data).
Calendar years are carried as display metadata only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .errors import (
    FewerThanTwoCycles,
    InvalidSeries,
    LagTooLarge,
    LengthMismatch,
    NonPositiveVariance,
    PartialCycle,
    PeriodMismatch,
    SampleSizeOutOfRange,
)

__all__ = [
    "TimeSeries",
    "SeasonalStats",
    "AcfResult",
    "seasonal_stats",
    "standardize",
    "acf",
    "difference",
    "normality_test",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)  # always a private copy
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Immutable univariate series with a declared period.

    Parameters
    ----------
    values : array_like
        Observations ``X_1..X_N``. Must be finite; missing values are
        rejected rather than imputed.
    period : int
        Number of seasons per cycle (12 for monthly, 1 for annual).
    label : str
        Free text used in reports.
    start_year : int, optional
        Calendar year of the first cycle. Used only for labelling.
    start_index : int
        Time index of the first observation (always 1 by convention).
    """

    values: np.ndarray
    period: int = 1
    label: str = ""
    start_year: int | None = None
    start_index: int = 1

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1:
            raise InvalidSeries("values must be one-dimensional")
        if arr.size < 2:
            raise InvalidSeries(f"need at least 2 observations, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0]) + 1
            raise InvalidSeries(f"non-finite value at t={bad}; missing values are not supported")
        if int(self.period) != self.period or self.period < 1:
            raise InvalidSeries(f"period must be a positive integer, got {self.period!r}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "period", int(self.period))

    def __len__(self):
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def seasons(self) -> np.ndarray:
        """Season index ``nu`` (1-based) of every observation."""
        return np.arange(self.n) % self.period + 1

    def time_label(self, t: int) -> int:
        """Calendar year of time index ``t``, or ``t`` itself without a start year."""
        if self.start_year is None:
            return int(t)
        return int(self.start_year + (t - 1) // self.period)

    def with_values(self, values, label: str | None = None) -> "TimeSeries":
        return TimeSeries(
            values,
            period=self.period,
            label=self.label if label is None else label,
            start_year=self.start_year,
            start_index=self.start_index,
        )

    def segment(self, start: int, stop: int) -> "TimeSeries":
        """Observations with time indices ``start <= t < stop`` (1-based)."""
        vals = self.values[start - 1 : stop - 1]
        year = None
        if self.start_year is not None and (start - 1) % self.period == 0:
            year = self.time_label(start)
        return TimeSeries(vals, period=self.period, label=self.label, start_year=year)

    def reversed(self) -> "TimeSeries":
        return self.with_values(self.values[::-1])


@dataclass(frozen=True)
class SeasonalStats:
    means: np.ndarray
    std_devs: np.ndarray
    cycles: int

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen_array(self.means))
        object.__setattr__(self, "std_devs", _frozen_array(self.std_devs))
        if self.means.shape != self.std_devs.shape:
            raise ValueError("means and std_devs must have the same length")
        if np.any(self.std_devs <= 0):
            raise NonPositiveVariance("seasonal standard deviations must be positive")

    @property
    def period(self) -> int:
        return self.means.size


@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    correlations: np.ndarray
    white_noise_band: float
    n: int = field(default=0)

    def outside_band(self) -> np.ndarray:
        """Boolean mask of lags >= 1 whose correlation leaves the 95% band."""
        mask = np.abs(self.correlations) > self.white_noise_band
        mask[0] = False
        return mask


def _cycles(series: TimeSeries) -> int:
    T = series.period
    if series.n % T:
        raise PartialCycle(
            f"series length {series.n} is not a whole number of cycles of period {T}"
        )
    d = series.n // T
    if d < 2:
        raise FewerThanTwoCycles(f"need at least 2 complete cycles, got {d}")
    return d


def seasonal_stats(series: TimeSeries) -> SeasonalStats:
    """Per-season sample means and standard deviations (divisor ``d - 1``)."""
    d = _cycles(series)
    table = series.values.reshape(d, series.period)
    means = table.mean(axis=0)
    var = ((table - means) ** 2).sum(axis=0) / (d - 1)
    if np.any(var <= 0):
        flat = [int(v) + 1 for v in np.flatnonzero(var <= 0)]
        raise NonPositiveVariance(f"zero sample variance in season(s) {flat}")
    return SeasonalStats(means, np.sqrt(var), d)


def standardize(series: TimeSeries, stats: SeasonalStats) -> TimeSeries:
    """Subtract the seasonal mean and divide by the seasonal standard deviation."""
    if stats.period != series.period:
        raise PeriodMismatch(f"stats period {stats.period} != series period {series.period}")
    idx = series.seasons - 1
    z = (series.values - stats.means[idx]) / stats.std_devs[idx]
    return series.with_values(z)


def acf(series: TimeSeries, max_lag: int) -> AcfResult:
    """Lag-``h`` sample correlation of an already standardized series.

    Uses the lagged inner product divided by ``N`` (not ``N - h``), with no
    renormalization. The lag-0 value therefore equals ``sum(S**2) / N``,
    which is ``(d - 1) / d`` for a series produced by :func:`standardize`.
    The caller is responsible for standardizing first.
    """
    x = series.values
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise LagTooLarge(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    corr = np.array([np.dot(x[: n - h], x[h:]) / n for h in range(max_lag + 1)])
    return AcfResult(np.arange(max_lag + 1), corr, 1.96 / np.sqrt(n), n)


def difference(target: TimeSeries, reference: TimeSeries) -> TimeSeries:
    """Target-minus-reference series."""
    if target.period != reference.period:
        raise PeriodMismatch(f"periods differ: {target.period} vs {reference.period}")
    if target.n != reference.n:
        raise LengthMismatch(f"lengths differ: {target.n} vs {reference.n}")
    if (
        target.start_year is not None
        and reference.start_year is not None
        and target.start_year != reference.start_year
    ):
        raise LengthMismatch(
            f"series are not aligned: start years {target.start_year} vs {reference.start_year}"
        )
    label = f"{target.label} - {reference.label}" if target.label or reference.label else ""
    return target.with_values(target.values - reference.values, label=label)


def normality_test(residuals) -> tuple[float, float]:
    """Shapiro-Wilk W statistic and p-value (Royston's approximation).

    Apply to residuals after trend, seasonal cycle and shifts are removed.
    """
    x = np.asarray(residuals, dtype=float)
    if x.ndim != 1 or not 3 <= x.size <= 5000:
        raise SampleSizeOutOfRange(f"Shapiro-Wilk needs 3 <= n <= 5000, got {x.size}")
    res = _sps.shapiro(x)
    return float(res.statistic), float(min(max(res.pvalue, 0.0), 1.0))
