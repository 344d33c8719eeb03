"""Penalized Gaussian likelihood for mean-shift changepoint configurations.

The model is ``X_t = mu_t + delta_t + e_t`` where ``mu_t`` is a constant,
linear-trend or seasonal mean shared by all regimes, ``delta_t`` is the
regime offset (zero in the first regime) and ``e_t`` is a stationary AR(p)
series whose parameters are the same in every regime.

For fixed AR parameters the mean and regime offsets are estimated by
generalized least squares (ordinary least squares on prediction-error
transformed data) and the innovation variance is profiled out, so only the
``p`` partial autocorrelations are optimized numerically.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import math

import numpy as np

from .armodel import (
    ArFit,
    MeanKind,
    _mean_model_from_coef,
    _yule_walker_pacf,
    mean_design,
    optimize_pacf,
    pacf_to_ar,
    prediction_errors,
)
from .errors import InvalidConfig, NonStationaryFit, SegmentTooShort
from .series import TimeSeries

__all__ = [
    "PenaltyKind",
    "ChangepointConfig",
    "PenalizedFit",
    "penalty",
    "gaussian_loglik",
    "Objective",
    "MIN_SEG",
]

MIN_SEG = 2
_TINY = float(np.finfo(float).tiny)
_LOG2PI = np.log(2.0 * np.pi)


class PenaltyKind(str, Enum):
    AIC = "aic"
    BIC = "bic"
    MBIC = "mbic"
    MDL = "mdl"

    @classmethod
    def parse(cls, value) -> "PenaltyKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown penalty {value!r}; expected one of "
                             f"{[k.value for k in cls]}") from None


@dataclass(frozen=True)
class ChangepointConfig:
    """Ordered changepoint times ``tau_1 < ... < tau_m`` in ``2..N``.

    ``tau_i`` is the first time of regime ``i + 1``; with ``tau_0 = 1`` and
    ``tau_{m+1} = N + 1``, time ``t`` lies in regime ``i`` when
    ``tau_{i-1} <= t < tau_i``.
    """

    taus: tuple
    n: int

    def __post_init__(self):
        taus = tuple(int(t) for t in self.taus)
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise InvalidConfig(f"changepoint times must be strictly increasing: {taus}")
        if taus and (taus[0] < 2 or taus[-1] > self.n):
            raise InvalidConfig(f"changepoint times must lie in 2..{self.n}: {taus}")
        object.__setattr__(self, "taus", taus)

    @property
    def m(self) -> int:
        return len(self.taus)

    @property
    def boundaries(self) -> tuple:
        return (1, *self.taus, self.n + 1)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def regime_of(self) -> np.ndarray:
        """Regime number (0-based) of every time ``t = 1..N``."""
        t = np.arange(1, self.n + 1)
        return np.searchsorted(np.asarray(self.taus, dtype=int), t, side="right")

    def check_min_seg(self, min_seg: int = MIN_SEG):
        if self.segment_lengths.min() < min_seg:
            raise SegmentTooShort(
                f"configuration {self.taus} has a segment shorter than {min_seg} observations"
            )

    def labels(self, series: TimeSeries) -> list:
        return [series.time_label(t) for t in self.taus]


def penalty(kind, config: ChangepointConfig, n: int | None = None) -> float:
    """Changepoint-configuration penalty; zero when there are no changepoints."""
    return _penalty(PenaltyKind.parse(kind), config.taus, config.n if n is None else n)


def _penalty(kind: PenaltyKind, taus: tuple, n: int) -> float:
    m = len(taus)
    if m == 0:
        return 0.0
    if kind is PenaltyKind.AIC:
        return 2.0 * (2 * m + 2)
    if kind is PenaltyKind.BIC:
        return (2 * m + 2) * math.log(n)
    b = (1, *taus, n + 1)
    log_len = sum(math.log(hi - lo) for lo, hi in zip(b, b[1:]))
    if kind is PenaltyKind.MBIC:
        return 3 * m * math.log(n) + log_len - (m + 1) * math.log(n)
    # MDL
    return log_len + 2 * math.log(m) + 2 * sum(math.log(t) for t in taus[1:])


@dataclass(frozen=True)
class PenalizedFit:
    config: ChangepointConfig
    mean_model: object
    offsets: np.ndarray
    error_model: ArFit
    minus2loglik: float
    penalty: float = 0.0
    penalty_kind: PenaltyKind | None = None
    fitted_mean: np.ndarray = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.minus2loglik + self.penalty

    def with_penalty(self, kind) -> "PenalizedFit":
        kind = PenaltyKind.parse(kind)
        return PenalizedFit(self.config, self.mean_model, self.offsets, self.error_model,
                            self.minus2loglik, penalty(kind, self.config), kind, self.fitted_mean)

    def segment_means(self) -> np.ndarray:
        """Average fitted mean over each regime."""
        reg = self.config.regime_of()
        return np.array([self.fitted_mean[reg == i].mean() for i in range(self.config.m + 1)])


def regime_design(config: ChangepointConfig) -> np.ndarray:
    """Indicator columns for regimes 2..m+1 (the first regime is the baseline)."""
    reg = config.regime_of()
    if config.m == 0:
        return np.zeros((config.n, 0))
    return (reg[:, None] == np.arange(1, config.m + 1)[None, :]).astype(float)


def _gls_profile(x: np.ndarray, D: np.ndarray, pacf: np.ndarray):
    """-2 loglik with beta and sigma2 profiled out at fixed partial autocorrelations."""
    n = x.size
    Z = np.column_stack([x, D])
    E, r = prediction_errors(Z, pacf)
    E /= np.sqrt(r)[:, None]
    beta, *_ = np.linalg.lstsq(E[:, 1:], E[:, 0], rcond=None)
    resid = E[:, 0] - E[:, 1:] @ beta
    rss = float(resid @ resid)
    if rss <= 0:
        rss = np.finfo(float).tiny
    m2ll = n * _LOG2PI + n * np.log(rss / n) + float(np.sum(np.log(r))) + n
    return m2ll, beta, rss / n


def _ar1_profile(x: np.ndarray, D: np.ndarray):
    """Fast AR(1) version of :func:`_gls_profile` for the optimizer.

    For AR(1) the Gram matrix of prediction-error transformed columns is
    ``A0 - a A1 + a^2 A2``, so each evaluation is a small solve.
    """
    n = x.size
    Z = np.column_stack([x, D])
    A0 = Z.T @ Z
    L = Z[1:].T @ Z[:-1]
    A1 = L + L.T
    A2 = Z[1:-1].T @ Z[1:-1]

    def m2ll(pacf):
        a = float(pacf[0])
        G = A0 - a * A1 + (a * a) * A2
        Gdd, gdx = G[1:, 1:], G[1:, 0]
        rss = G[0, 0] - gdx @ np.linalg.solve(Gdd, gdx)
        rss = max(rss, np.finfo(float).tiny)
        return n * _LOG2PI + n * np.log(rss / n) - np.log1p(-a * a) + n

    return m2ll


def _fit_config(x, D_mean, config, p, kind, period):
    D = np.column_stack([D_mean, regime_design(config)])
    if p == 0:
        pacf = np.zeros(0)
    elif p == 1:
        pacf = optimize_pacf(_ar1_profile(x, D), 1, [])
    else:
        beta0, *_ = np.linalg.lstsq(D, x, rcond=None)
        start = _yule_walker_pacf(x - D @ beta0, p)
        pacf = optimize_pacf(lambda a: _gls_profile(x, D, a)[0], p, [start])
        if np.any(np.abs(pacf) >= 1.0 - 1e-8):
            raise NonStationaryFit(f"partial autocorrelations hit the unit boundary: {pacf}")
    m2ll, beta, s2 = _gls_profile(x, D, pacf)
    k = D_mean.shape[1]
    mm = _mean_model_from_coef(kind, beta[:k], period)
    offsets = np.concatenate([[0.0], beta[k:]])
    ar = ArFit(p, pacf_to_ar(pacf), float(s2), mm, -0.5 * m2ll, pacf, x.size, period)
    return PenalizedFit(config, mm, offsets, ar, float(m2ll), fitted_mean=D @ beta)


def gaussian_loglik(series: TimeSeries, config: ChangepointConfig, mean_model_kind="constant",
                    p: int = 0, min_seg: int = MIN_SEG):
    """Exact Gaussian ``-2 log L`` of the best model with the given changepoints.

    Returns ``(minus2loglik, fit)``; ``fit`` carries zero penalty.
    """
    if config.n != series.n:
        raise InvalidConfig(f"config is for N={config.n}, series has N={series.n}")
    config.check_min_seg(min_seg)
    kind = MeanKind.parse(mean_model_kind)
    D_mean = mean_design(kind, series.n, series.period)
    fit = _fit_config(series.values, D_mean, config, p, kind, series.period)
    return fit.minus2loglik, fit


class Objective:
    """Cached penalized objective ``-2 log L + P`` over changepoint tuples.

    The constant-mean IID case uses a closed form from cumulative sums; all
    other cases go through :func:`gaussian_loglik`.
    """

    def __init__(self, series: TimeSeries, penalty_kind="bic", mean_model_kind="constant",
                 p: int = 0, min_seg: int = MIN_SEG):
        self.series = series
        self.n = series.n
        self.penalty_kind = PenaltyKind.parse(penalty_kind)
        self.kind = MeanKind.parse(mean_model_kind)
        self.p = int(p)
        self.min_seg = int(min_seg)
        self._D_mean = mean_design(self.kind, series.n, series.period)
        self._cache = {}
        self._fast = self.kind is MeanKind.CONSTANT and self.p == 0
        if self._fast:
            xc = series.values - series.values.mean()
            self._cs = np.concatenate([[0.0], np.cumsum(xc)])
            self._cs_list = self._cs.tolist()
            self._ss = float(xc @ xc)

    def __len__(self):
        return len(self._cache)

    def feasible(self, taus) -> bool:
        b = (1, *taus, self.n + 1)
        return all(bb - aa >= self.min_seg for aa, bb in zip(b, b[1:]))

    def minus2loglik(self, taus: tuple) -> float:
        if self._fast:
            cs, n = self._cs_list, self.n
            b = (0, *(t - 1 for t in taus), n)
            explained = 0.0
            for lo, hi in zip(b, b[1:]):
                d = cs[hi] - cs[lo]
                explained += d * d / (hi - lo)
            rss = max(self._ss - explained, _TINY)
            return n * _LOG2PI + n * math.log(rss / n) + n
        cfg = ChangepointConfig(taus, self.n)
        return _fit_config(self.series.values, self._D_mean, cfg, self.p, self.kind,
                           self.series.period).minus2loglik

    def __call__(self, taus) -> float:
        taus = tuple(taus)
        val = self._cache.get(taus)
        if val is None:
            if any(b <= a for a, b in zip(taus, taus[1:])) or (taus and not 2 <= taus[0] <= taus[-1] <= self.n):
                ChangepointConfig(taus, self.n)  # raises with the specific problem
            val = self.minus2loglik(taus) + _penalty(self.penalty_kind, taus, self.n)
            self._cache[taus] = val
        return val

    def fit(self, taus) -> PenalizedFit:
        cfg = ChangepointConfig(tuple(taus), self.n)
        _, f = gaussian_loglik(self.series, cfg, self.kind, self.p, self.min_seg)
        return f.with_penalty(self.penalty_kind)
