"""At-most-one-changepoint (AMOC) mean-shift tests.

``cusum`` implements the scaled cumulative-sum contrast; ``scusum_test``
averages its squares and ``max_cusum_test`` takes the maximum absolute value,
optionally after removing a fitted linear trend (the CUSUM_D variant).
``amoc_pipeline`` strings together AR fitting under the no-change null,
pre-whitening and the appropriate test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .armodel import ArFit, MeanKind, fit_ar, mean_design, prewhiten
from .errors import SeriesTooShort, ZeroVariance
from .nulldist import NullDistribution, NullKind, shipped_null
from .series import TimeSeries

__all__ = [
    "StatisticKind",
    "AmocResult",
    "SCUSUM_TABLE",
    "cusum",
    "scusum_test",
    "max_cusum_test",
    "amoc_pipeline",
]

# Published asymptotic critical values of int_0^1 B(t)^2 dt.
SCUSUM_TABLE = {90.0: 0.3473046, 95.0: 0.4613744, 97.5: 0.5806168, 99.0: 0.7434348}


class StatisticKind(str, Enum):
    SCUSUM = "scusum"
    MAX_CUSUM = "max_cusum"
    CUSUM_D = "cusum_d"


@dataclass(frozen=True)
class AmocResult:
    statistic: float
    statistic_kind: StatisticKind
    changepoint_estimate: int
    p_value: float
    critical_values: dict
    prewhitened: bool
    null_kind: NullKind
    trace: np.ndarray = field(repr=False)
    series: TimeSeries = field(repr=False)
    fit: ArFit | None = field(default=None, repr=False)

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    @property
    def changepoint_label(self) -> int:
        """Calendar label of the last observation before the estimated shift."""
        return self.series.time_label(self.changepoint_estimate)


def cusum(series: TimeSeries) -> np.ndarray:
    """``CUSUM(k)`` for ``k = 1..N`` (element ``k - 1``).

    ``CUSUM(k) = (sum_{t<=k} X_t - k/N sum_t X_t) / (sigma_hat sqrt(N))`` with
    ``sigma_hat`` the sample standard deviation (divisor ``N - 1``).
    """
    x = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        raise SeriesTooShort(f"CUSUM needs N >= 4, got {n}")
    sd = np.std(x, ddof=1)
    if not sd > 0:
        raise ZeroVariance("series has zero sample variance")
    k = np.arange(1, n + 1)
    s = np.cumsum(x)
    c = (s - k / n * s[-1]) / (sd * np.sqrt(n))
    c[-1] = 0.0  # exact by telescoping; kill the rounding residue
    return c


def _argmax_k(trace: np.ndarray) -> int:
    # admissible k = 2..N; np.argmax keeps the first (smallest k) on ties
    return int(np.argmax(np.abs(trace[1:]))) + 2


def _result(stat, kind, trace, null, series, prewhitened, fit):
    return AmocResult(
        statistic=float(stat),
        statistic_kind=kind,
        changepoint_estimate=_argmax_k(trace),
        p_value=null.p_value(stat),
        critical_values=null.critical_values(),
        prewhitened=prewhitened,
        null_kind=null.kind,
        trace=trace,
        series=series,
        fit=fit,
    )


def scusum_test(series: TimeSeries, null: NullDistribution | None = None, *,
                prewhitened: bool = False, fit: ArFit | None = None) -> AmocResult:
    """Mean of squared CUSUMs, ``(1/N) sum_k CUSUM(k)^2``, referred to the
    integrated squared bridge law (its Riemann-sum limit).

    Autocorrelated data must be pre-whitened first (see :func:`amoc_pipeline`).
    """
    null = null or shipped_null(NullKind.INTEGRATED_BRIDGE_SQUARED)
    trace = cusum(series)
    return _result(np.mean(trace**2), StatisticKind.SCUSUM, trace, null, series, prewhitened, fit)


def detrend_ols(series: TimeSeries) -> TimeSeries:
    D = mean_design(MeanKind.TREND, series.n)
    coef, *_ = np.linalg.lstsq(D, series.values, rcond=None)
    return series.with_values(series.values - D @ coef)


def max_cusum_test(series: TimeSeries, trend_adjusted: bool = False,
                   null: NullDistribution | None = None, *,
                   prewhitened: bool = False, fit: ArFit | None = None) -> AmocResult:
    """``max_{2<=k<=N} |CUSUM(k)|``.

    With ``trend_adjusted`` the CUSUM is taken over residuals from an OLS
    intercept-plus-slope fit and referred to the trend-adjusted sup law
    (CUSUM_D); otherwise to ``sup |B(t)|``.
    """
    if trend_adjusted:
        null = null or shipped_null(NullKind.SUP_TREND_ADJUSTED)
        trace = cusum(detrend_ols(series))
        kind = StatisticKind.CUSUM_D
    else:
        null = null or shipped_null(NullKind.SUP_BRIDGE)
        trace = cusum(series)
        kind = StatisticKind.MAX_CUSUM
    stat = np.max(np.abs(trace[1:]))
    return _result(stat, kind, trace, null, series, prewhitened, fit)


def amoc_pipeline(series: TimeSeries, mean_model_kind="constant", p: int = 1,
                  nulls: dict | None = None) -> AmocResult:
    """Fit under the null, pre-whiten when ``p >= 1``, then test.

    Constant and seasonal means use SCUSUM on the (pre-whitened) series;
    a linear-trend mean uses CUSUM_D.
    """
    kind = MeanKind.parse(mean_model_kind)
    nulls = nulls or {}
    fit = None
    y = series
    if p >= 1 or kind is MeanKind.SEASONAL:
        fit = fit_ar(series, kind, p)
        y = prewhiten(series, fit)
    prewhitened = p >= 1
    if kind is MeanKind.TREND:
        return max_cusum_test(y, trend_adjusted=True, null=nulls.get(NullKind.SUP_TREND_ADJUSTED),
                              prewhitened=prewhitened, fit=fit)
    return scusum_test(y, nulls.get(NullKind.INTEGRATED_BRIDGE_SQUARED),
                       prewhitened=prewhitened, fit=fit)
