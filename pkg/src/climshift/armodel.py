"""AR(p) error models under a deterministic mean, and pre-whitening.

The mean structure is fitted by ordinary least squares; the AR coefficients
and innovation variance are then fitted by exact Gaussian maximum
likelihood on the mean-removed residuals. The optimizer works on partial
autocorrelations squashed into (-1, 1), so every returned fit is causal.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize

from .errors import ModelSeriesMismatch, NonStationaryFit, SeriesTooShort
from .series import TimeSeries

__all__ = [
    "MeanKind",
    "MeanModel",
    "ArFit",
    "mean_design",
    "n_mean_params",
    "fit_mean",
    "pacf_to_ar",
    "ar_to_pacf",
    "is_causal",
    "predictor_coefficients",
    "prediction_errors",
    "ar_minus2loglik",
    "ar_acvf",
    "fit_ar",
    "prewhiten",
    "long_run_variance",
    "select_order",
]

_LOG2PI = np.log(2.0 * np.pi)
_PACF_LIMIT = 1.0 - 1e-8


class MeanKind(str, Enum):
    CONSTANT = "constant"
    TREND = "trend"
    SEASONAL = "seasonal"

    @classmethod
    def parse(cls, value) -> "MeanKind":
        if isinstance(value, cls):
            return value
        aliases = {"linear": "trend", "lineartrend": "trend", "seasonaloffsets": "seasonal"}
        key = str(value).lower().replace("_", "").replace("-", "")
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class MeanModel:
    """Fitted deterministic mean.

    ``offsets`` holds all ``T`` seasonal effects (they sum to zero) and is
    empty unless ``kind`` is seasonal. ``beta1`` is the slope per time step
    for the trend model and 0 otherwise.
    """

    kind: MeanKind
    beta0: float
    beta1: float = 0.0
    offsets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", MeanKind.parse(self.kind))
        if self.kind is MeanKind.SEASONAL and abs(sum(self.offsets)) > 1e-8 * max(
            1.0, max((abs(o) for o in self.offsets), default=1.0)
        ):
            raise ValueError("seasonal offsets must sum to zero")

    def values(self, n: int, period: int = 1) -> np.ndarray:
        t = np.arange(1, n + 1, dtype=float)
        mu = np.full(n, self.beta0)
        if self.kind is MeanKind.TREND:
            mu = mu + self.beta1 * t
        elif self.kind is MeanKind.SEASONAL:
            mu = mu + np.asarray(self.offsets)[np.arange(n) % period]
        return mu


def mean_design(kind, n: int, period: int = 1) -> np.ndarray:
    """Regression design for the mean: intercept, then slope or sum-to-zero season columns."""
    kind = MeanKind.parse(kind)
    t = np.arange(1, n + 1, dtype=float)
    cols = [np.ones(n)]
    if kind is MeanKind.TREND:
        cols.append(t)
    elif kind is MeanKind.SEASONAL:
        if period < 2:
            raise ValueError("seasonal mean needs period >= 2")
        season = np.arange(n) % period
        for nu in range(period - 1):
            c = (season == nu).astype(float)
            c[season == period - 1] = -1.0
            cols.append(c)
    return np.column_stack(cols)


def n_mean_params(kind, period: int = 1) -> int:
    kind = MeanKind.parse(kind)
    return {MeanKind.CONSTANT: 1, MeanKind.TREND: 2, MeanKind.SEASONAL: period}[kind]


def _mean_model_from_coef(kind: MeanKind, coef: np.ndarray, period: int) -> MeanModel:
    if kind is MeanKind.TREND:
        return MeanModel(kind, float(coef[0]), float(coef[1]))
    if kind is MeanKind.SEASONAL:
        s = list(map(float, coef[1:]))
        s.append(-float(np.sum(coef[1:])))
        return MeanModel(kind, float(coef[0]), 0.0, tuple(s))
    return MeanModel(kind, float(coef[0]))


def fit_mean(series: TimeSeries, kind) -> MeanModel:
    """Ordinary least squares fit of the mean structure."""
    kind = MeanKind.parse(kind)
    D = mean_design(kind, series.n, series.period)
    coef, *_ = np.linalg.lstsq(D, series.values, rcond=None)
    return _mean_model_from_coef(kind, coef, series.period)


# --- AR parameter algebra -------------------------------------------------


def pacf_to_ar(pacf) -> np.ndarray:
    """Map partial autocorrelations to AR coefficients (Durbin-Levinson)."""
    pacf = np.asarray(pacf, dtype=float)
    phi = np.zeros(0)
    for k, a in enumerate(pacf):
        phi = np.concatenate([phi - a * phi[::-1], [a]]) if k else np.array([a])
    return phi


def ar_to_pacf(phi) -> np.ndarray:
    """Inverse of :func:`pacf_to_ar`; raises if the model is not causal."""
    phi = np.array(phi, dtype=float)
    p = phi.size
    pacf = np.zeros(p)
    for k in range(p, 0, -1):
        a = phi[k - 1]
        if abs(a) >= 1:
            raise NonStationaryFit(f"AR polynomial has a root on or inside the unit circle: {phi}")
        pacf[k - 1] = a
        phi = (phi[: k - 1] + a * phi[: k - 1][::-1]) / (1 - a * a)
    return pacf


def is_causal(phi) -> bool:
    """Schur-Cohn check by step-down recursion: causal iff every partial
    autocorrelation lies strictly inside (-1, 1)."""
    try:
        pacf = ar_to_pacf(phi)
    except NonStationaryFit:
        return False
    return bool(np.all(np.isfinite(pacf)))


def predictor_coefficients(pacf):
    """Finite-past one-step predictors for a causal AR(p).

    Returns ``(coefs, r)`` where ``coefs[t]`` (``t = 0..p``) predicts the
    ``t+1``-th observation from the ``t`` before it (most recent first) and
    ``r[t]`` is that prediction's mean squared error in units of the
    innovation variance. From ``t = p`` on, the predictor is the AR
    recursion itself with ``r = 1``.
    """
    pacf = np.asarray(pacf, dtype=float)
    p = pacf.size
    r = np.empty(p + 1)
    r[0] = 1.0 / np.prod(1.0 - pacf**2) if p else 1.0
    coefs = [np.zeros(0)]
    phi = np.zeros(0)
    for k in range(p):
        a = pacf[k]
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        coefs.append(phi)
        r[k + 1] = r[k] * (1.0 - a * a)
    return coefs, r


def prediction_errors(z, pacf):
    """One-step prediction errors of zero-mean data under a causal AR model.

    ``z`` may be 1-D or 2-D (time along axis 0; each column filtered
    independently). Returns ``(errors, r)`` with ``r`` the relative MSE per
    time step, length ``N``.
    """
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    coefs, r_start = predictor_coefficients(pacf)
    p = len(coefs) - 1
    e = z.copy()
    for t in range(1, min(p, n)):
        c = coefs[t]
        e[t] = z[t] - np.tensordot(c, z[t - 1 :: -1][: t], axes=(0, 0))
    if n > p and p > 0:
        phi = coefs[p]
        for j in range(1, p + 1):
            e[p:] -= phi[j - 1] * z[p - j : n - j]
    r = np.ones(n)
    r[: min(p, n)] = r_start[: min(p, n)]
    return e, r


def ar_minus2loglik(z, pacf, sigma2=None):
    """Exact Gaussian -2 log-likelihood of zero-mean ``z``.

    When ``sigma2`` is None the innovation variance is profiled out at its
    maximum likelihood value. Returns ``(minus2loglik, sigma2)``.
    """
    e, r = prediction_errors(z, pacf)
    n = e.shape[0]
    q = float(np.sum(e * e / r))
    if sigma2 is None:
        sigma2 = q / n
        if sigma2 <= 0:
            raise NonStationaryFit("zero residual variance")
        return n * _LOG2PI + n * np.log(sigma2) + float(np.sum(np.log(r))) + n, sigma2
    return n * _LOG2PI + n * np.log(sigma2) + float(np.sum(np.log(r))) + q / sigma2, sigma2


def ar_acvf(phi, sigma2: float, nlags: int) -> np.ndarray:
    """Autocovariances ``gamma(0..nlags)`` of a causal AR(p)."""
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    if p == 0:
        g = np.zeros(nlags + 1)
        g[0] = sigma2
        return g
    # Yule-Walker system for gamma(0..p)
    A = np.zeros((p + 1, p + 1))
    b = np.zeros(p + 1)
    b[0] = sigma2
    for k in range(p + 1):
        A[k, k] += 1.0
        for j in range(1, p + 1):
            A[k, abs(k - j)] -= phi[j - 1]
    g = np.linalg.solve(A, b)
    out = np.zeros(max(nlags, p) + 1)
    out[: p + 1] = g
    for h in range(p + 1, out.size):
        out[h] = np.dot(phi, out[h - 1 :: -1][:p])
    return out[: nlags + 1]


def _yule_walker_pacf(z: np.ndarray, p: int) -> np.ndarray:
    n = z.size
    g = np.array([np.dot(z[: n - h], z[h:]) / n for h in range(p + 1)])
    if g[0] <= 0:
        return np.zeros(p)
    rho = g / g[0]
    pacf = np.zeros(p)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, p + 1):
        a = (rho[k] - np.dot(phi, rho[k - 1 : 0 : -1])) / v if k > 1 else rho[1]
        a = float(np.clip(a, -0.99, 0.99))
        pacf[k - 1] = a
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1 - a * a
    return pacf


def optimize_pacf(objective, p: int, starts) -> np.ndarray:
    """Minimize ``objective(pacf)`` over the open hypercube (-1, 1)^p.

    Deterministic: bounded Brent search for ``p = 1``, otherwise L-BFGS-B on
    ``atanh``-transformed parameters from each given start, keeping the best.
    """
    if p == 0:
        return np.zeros(0)
    if p == 1:
        res = optimize.minimize_scalar(
            lambda a: objective(np.array([a])),
            bounds=(-_PACF_LIMIT, _PACF_LIMIT),
            method="bounded",
            options={"xatol": 1e-10, "maxiter": 500},
        )
        best = np.array([res.x])
        # bounded Brent is local; compare against the supplied starts
        best_val = objective(best)
        for s in starts:
            s = np.clip(np.asarray(s, dtype=float), -0.999, 0.999)
            res = optimize.minimize_scalar(
                lambda a: objective(np.array([a])),
                bounds=(max(-_PACF_LIMIT, s[0] - 0.25), min(_PACF_LIMIT, s[0] + 0.25)),
                method="bounded",
                options={"xatol": 1e-10, "maxiter": 500},
            )
            val = objective(np.array([res.x]))
            if val < best_val - 1e-12:
                best, best_val = np.array([res.x]), val
        return best

    def f(u):
        return objective(np.tanh(u))

    best, best_val = None, np.inf
    for s in starts:
        u0 = np.arctanh(np.clip(np.asarray(s, dtype=float), -0.99, 0.99))
        res = optimize.minimize(f, u0, method="L-BFGS-B", options={"maxiter": 2000, "ftol": 1e-14, "gtol": 1e-9})
        if res.fun < best_val:
            best, best_val = np.tanh(res.x), res.fun
    return best


@dataclass(frozen=True)
class ArFit:
    """Mean model plus AR(p) errors fitted under the no-changepoint null."""

    order: int
    phi: np.ndarray
    sigma2: float
    mean_model: MeanModel
    loglik: float
    pacf: np.ndarray
    n: int
    period: int = 1

    @property
    def minus2loglik(self) -> float:
        return -2.0 * self.loglik


def _pacf_checked(pacf) -> np.ndarray:
    pacf = np.asarray(pacf, dtype=float)
    if np.any(np.abs(pacf) >= _PACF_LIMIT):
        raise NonStationaryFit(f"fitted partial autocorrelations on the unit boundary: {pacf}")
    return pacf


def _fit_ar_residuals(z: np.ndarray, p: int, extra_starts=()):
    def obj(pacf):
        return ar_minus2loglik(z, pacf)[0]

    starts = [_yule_walker_pacf(z, p), np.zeros(p), *extra_starts]
    pacf = _pacf_checked(optimize_pacf(obj, p, starts))
    m2ll, s2 = ar_minus2loglik(z, pacf)
    return pacf, m2ll, s2


def fit_ar(series: TimeSeries, mean_model_kind="constant", p: int = 1) -> ArFit:
    """Fit ``X_t = mu_t + e_t`` with AR(``p``) errors ``e_t``.

    Two stages: OLS for the mean, exact Gaussian MLE for the AR part on the
    OLS residuals. ``loglik`` is the exact log-likelihood of those
    residuals. For ``p > 1`` the optimizer is also started from the
    ``p - 1`` solution, so the likelihood never decreases with the order.
    """
    kind = MeanKind.parse(mean_model_kind)
    if p < 0:
        raise ValueError("p must be >= 0")
    n_mean = n_mean_params(kind, series.period)
    if series.n <= p + n_mean + 2:
        raise SeriesTooShort(f"N={series.n} too short for AR({p}) with {n_mean} mean parameters")
    mm = fit_mean(series, kind)
    z = series.values - mm.values(series.n, series.period)
    if p == 0:
        pacf = np.zeros(0)
        m2ll, s2 = ar_minus2loglik(z, pacf)
    else:
        extra = []
        if p > 1:
            extra.append(np.concatenate([fit_ar(series, kind, p - 1).pacf, [0.0]]))
        pacf, m2ll, s2 = _fit_ar_residuals(z, p, extra)
    phi = pacf_to_ar(pacf)
    if not is_causal(phi):
        raise NonStationaryFit(f"fitted AR polynomial is not causal: {phi}")
    return ArFit(p, phi, float(s2), mm, -0.5 * m2ll, pacf, series.n, series.period)


def prewhiten(series: TimeSeries, fit: ArFit) -> TimeSeries:
    """One-step-ahead prediction errors ``Y_t = X_t - Xhat_t`` under ``fit``.

    ``Xhat_t = mu_t + sum_j phi_j (X_{t-j} - mu_{t-j})`` for ``t > p``; the
    first ``p`` predictions use the best linear predictor from the
    available finite past (``Xhat_1 = mu_1``).
    """
    if series.n != fit.n or series.period != fit.period:
        raise ModelSeriesMismatch(
            f"fit was made on N={fit.n}, T={fit.period}; series has N={series.n}, T={series.period}"
        )
    mu = fit.mean_model.values(series.n, series.period)
    e, _ = prediction_errors(series.values - mu, fit.pacf)
    return series.with_values(e, label=f"{series.label} (pre-whitened)".strip())


def long_run_variance(series: TimeSeries | None, fit: ArFit) -> float:
    """AR plug-in estimate ``sigma2 / (1 - sum(phi))**2``."""
    if series is not None and series.n != fit.n:
        raise ModelSeriesMismatch("series and fit lengths differ")
    if not is_causal(fit.phi):
        raise NonStationaryFit("long-run variance needs a causal AR fit")
    return float(fit.sigma2 / (1.0 - np.sum(fit.phi)) ** 2)


def select_order(series: TimeSeries, mean_model_kind="constant", max_p: int = 5) -> ArFit:
    """Fit AR(0..max_p) and return the fit with the smallest BIC."""
    kind = MeanKind.parse(mean_model_kind)
    n_mean = n_mean_params(kind, series.period)
    best, best_bic = None, np.inf
    for p in range(max_p + 1):
        try:
            fit = fit_ar(series, kind, p)
        except (SeriesTooShort, NonStationaryFit):
            break
        bic = fit.minus2loglik + (p + n_mean + 1) * np.log(series.n)
        if bic < best_bic:
            best, best_bic = fit, bic
    if best is None:
        raise SeriesTooShort("series too short for any AR order")
    return best
