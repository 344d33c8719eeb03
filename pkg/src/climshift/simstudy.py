"""Configuration distance and the three-shift simulation study.

The distance is this package's own choice (the metric used in the
literature it follows is cited, not stated):

``d(a, b) = |m_a - m_b| + (matching cost + N/2 * #unmatched) / N``

where the matching pairs changepoint times one-to-one at cost ``|s - t|``.
Any pair costs less than two unmatched points, so the optimum matches
``min(m_a, m_b)`` pairs; it is found exactly by dynamic programming over
order-preserving matchings.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datasets import fig5_spec, simulate
from .errors import InvalidConfig
from .likelihood import ChangepointConfig
from .search import GAParams, binary_segmentation, ga_search

__all__ = ["ConfigDistance", "config_distance", "StudyResult", "simulation_study", "METHODS"]

METHODS = ("binseg", "bic", "mbic", "mdl")


@dataclass(frozen=True)
class ConfigDistance:
    value: float
    count_term: float
    location_term: float


def _match_cost(a, b) -> float:
    """Minimum total ``|a_i - b_j|`` over order-preserving matchings of size ``len(a)``.

    Requires ``len(a) <= len(b)``, both sorted.
    """
    na, nb = len(a), len(b)
    if na == 0:
        return 0.0
    inf = np.inf
    # cost[i, j]: first i of a matched within first j of b
    cost = np.full((na + 1, nb + 1), inf)
    cost[0, :] = 0.0
    for i in range(1, na + 1):
        for j in range(i, nb + 1):
            cost[i, j] = min(cost[i, j - 1], cost[i - 1, j - 1] + abs(a[i - 1] - b[j - 1]))
    return float(cost[na, nb])


def config_distance(a, b, n: int | None = None) -> ConfigDistance:
    """Distance between two changepoint configurations on the same ``N``."""
    if isinstance(a, ChangepointConfig):
        n = a.n if n is None else n
        a = a.taus
    if isinstance(b, ChangepointConfig):
        if n is not None and b.n != n:
            raise InvalidConfig(f"configs are on different N ({n} vs {b.n})")
        n = b.n if n is None else n
        b = b.taus
    if n is None:
        raise ValueError("N is required when passing bare changepoint tuples")
    a, b = sorted(a), sorted(b)
    if len(a) > len(b):
        a, b = b, a
    dm = len(b) - len(a)
    count = dm + dm * (n / 2) / n
    loc = _match_cost(a, b) / n
    return ConfigDistance(count + loc, count, loc)


@dataclass
class StudyResult:
    """Per-method distance samples and estimated changepoint counts."""

    distances: dict
    m_hat: dict
    configs: dict
    truth: tuple
    shift: float
    seed: int

    @property
    def replicates(self) -> int:
        return len(next(iter(self.distances.values())))

    def mean_distance(self) -> dict:
        return {k: float(np.mean(v)) for k, v in self.distances.items()}

    def fraction_m(self, m: int) -> dict:
        return {k: float(np.mean(np.asarray(v) == m)) for k, v in self.m_hat.items()}

    def fraction_exact(self) -> dict:
        return {k: float(np.mean([c == self.truth for c in v])) for k, v in self.configs.items()}


def _one_replicate(args):
    seed, shift, p, bs_p, alpha, ga_params, n = args
    ts, truth = simulate(fig5_spec(shift, seed=seed, n=n))
    out = {}
    bs = binary_segmentation(ts, "constant", bs_p, alpha)
    out["binseg"] = bs.config.taus
    for pen in METHODS[1:]:
        out[pen] = ga_search(ts, pen, "constant", p, ga_params, seed=seed).config.taus
    return truth.taus, out


def simulation_study(replicates: int = 100, seed: int = 1, shift: float = 1.0, *, p: int = 0,
                     bs_p: int = 1, alpha: float = 0.05, ga_params: GAParams | None = None, n: int = 500,
                     n_jobs: int = 1) -> StudyResult:
    """Three alternating unit shifts in white noise, scored against the truth.

    Each replicate simulates ``N = 500`` points with means ``0, s, 0, s`` on
    four equal segments, runs binary segmentation and GA-minimized BIC,
    mBIC and MDL objectives, and records each estimate's distance to the
    true configuration. Binary segmentation pre-whitens with an AR(``bs_p``)
    fit, as in its usual climate form; the GA objectives use AR(``p``)
    errors, and ``p = 0`` is the correctly specified model here. Replicate
    seeds are spawned from ``SeedSequence(seed)`` so results do not depend
    on ``n_jobs``.
    """
    if replicates < 10:
        raise ValueError("replicates must be at least 10")
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(replicates)]
    jobs = [(s, shift, p, bs_p, alpha, ga_params, n) for s in seeds]
    if n_jobs > 1:
        with ProcessPoolExecutor(n_jobs) as ex:
            results = list(ex.map(_one_replicate, jobs))
    else:
        results = [_one_replicate(j) for j in jobs]
    truth = results[0][0]
    configs = {k: [r[1][k] for r in results] for k in METHODS}
    distances = {k: [config_distance(c, truth, n).value for c in v] for k, v in configs.items()}
    m_hat = {k: [len(c) for c in v] for k, v in configs.items()}
    return StudyResult(distances, m_hat, configs, truth, shift, seed)
