"""Multiple-changepoint search: exhaustive enumeration, genetic algorithm
and binary segmentation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amoc import AmocResult, amoc_pipeline
from .armodel import MeanKind, n_mean_params
from .errors import ClimShiftError, ProblemTooLarge
from .likelihood import (
    MIN_SEG,
    ChangepointConfig,
    Objective,
    PenalizedFit,
    PenaltyKind,
)
from .series import TimeSeries

__all__ = [
    "GAParams",
    "SearchResult",
    "enumerate_configs",
    "exhaustive_search",
    "ga_search",
    "binary_segmentation",
    "format_search_result",
    "parse_search_result",
]


def enumerate_configs(n: int, min_seg: int = MIN_SEG, max_m: int | None = None):
    """Yield every feasible changepoint tuple, in lexicographic order by depth."""

    def rec(start, prefix):
        yield prefix
        if max_m is not None and len(prefix) >= max_m:
            return
        for tau in range(start + min_seg, n + 2 - min_seg):
            yield from rec(tau, prefix + (tau,))

    yield from rec(1, ())


def exhaustive_search(series: TimeSeries, penalty_kind="bic", mean_model_kind="constant",
                      p: int = 0, max_m: int | None = None, min_seg: int = MIN_SEG,
                      objective: Objective | None = None) -> PenalizedFit:
    """Global minimizer of the penalized objective by brute-force enumeration.

    Allowed for ``N <= 25``, or ``N <= 200`` with ``max_m <= 3``. Ties go to
    the first configuration enumerated (fewest changepoints, then earliest).
    """
    n = series.n
    if not (n <= 25 or (max_m is not None and max_m <= 3 and n <= 200)):
        raise ProblemTooLarge(f"exhaustive search refused for N={n}, max_m={max_m}")
    obj = objective or Objective(series, penalty_kind, mean_model_kind, p, min_seg)
    best, best_val = (), math.inf
    for taus in enumerate_configs(n, min_seg, max_m):
        val = obj(taus)
        if val < best_val:
            best, best_val = taus, val
    return obj.fit(best)


@dataclass(frozen=True)
class GAParams:
    population: int = 200
    max_generations: int = 500
    stagnation: int = 50
    elitism: int = 2
    mutation_rate: float = 0.3
    jitter: int = 3
    tournament: int = 2
    immigrants: int = 20
    polish: bool = True
    polish_starts: int = 3
    polish_counts: int = 10


def _repair(taus, n, min_seg):
    out = []
    last = 1
    for t in sorted(set(int(t) for t in taus)):
        if t < 2 or t > n:
            continue
        if t - last >= min_seg:
            out.append(t)
            last = t
    while out and n + 1 - out[-1] < min_seg:
        out.pop()
    return tuple(out)


def _random_config(rng, n, min_seg):
    # inclusion rate drawn per individual so sparse and dense configs both appear
    rate = rng.uniform(0.0, 1.0 / min_seg) if rng.random() < 0.5 else rng.uniform(0.0, 10.0 / n)
    taus = np.flatnonzero(rng.random(n - 1) < rate) + 2
    return _repair(taus, n, min_seg)


def _mutate(rng, taus, n, min_seg, jitter):
    taus = list(taus)
    op = int(rng.integers(0, 3)) if taus else 0
    if op == 0:  # add
        taus.append(int(rng.integers(2, n + 1)))
    elif op == 1:  # delete
        taus.pop(int(rng.integers(0, len(taus))))
    else:  # jitter
        i = int(rng.integers(0, len(taus)))
        step = int(rng.integers(1, jitter + 1)) * (1 if rng.random() < 0.5 else -1)
        taus[i] += step
    return _repair(taus, n, min_seg)


def _crossover(rng, a, b, n, min_seg):
    union = sorted(set(a) | set(b))
    if not union:
        return ()
    keep = rng.random(len(union)) < 0.5
    return _repair([t for t, k in zip(union, keep) if k], n, min_seg)


def _polish(obj, taus, n, min_seg, feasible):
    """Greedy descent over single delete, add, and relocate moves.

    A relocation moves one changepoint to any time between its neighbours,
    so each sweep is an exact line search along every coordinate.
    """
    best, best_val = tuple(taus), obj(taus)
    improved = True
    while improved:
        improved = False
        cands = [best[:i] + best[i + 1:] for i in range(len(best))]
        bounds = (1,) + best + (n + 1,)
        for i in range(len(best)):
            for t in range(bounds[i] + min_seg, bounds[i + 2] - min_seg + 1):
                if t != best[i]:
                    cands.append(best[:i] + (t,) + best[i + 1:])
        present = set(best)
        for t in range(1 + min_seg, n + 2 - min_seg):
            if t not in present:
                cands.append(tuple(sorted(best + (t,))))
        for c in cands:
            if not feasible(c):
                continue
            v = obj(c)
            if v < best_val - 1e-12:
                best, best_val, improved = c, v, True
    return best


def ga_search(series: TimeSeries, penalty_kind="bic", mean_model_kind="constant", p: int = 0,
              ga_params: GAParams | None = None, seed: int = 0, min_seg: int = MIN_SEG,
              objective: Objective | None = None, initial=()) -> PenalizedFit:
    """Genetic-algorithm minimization of the penalized objective.

    Individuals are sorted changepoint tuples. Each generation keeps the
    ``elitism`` best, adds ``immigrants`` fresh random individuals to keep
    the search from collapsing onto one basin, then fills the population
    with children of
    tournament-selected parents: uniform crossover on the union of parent
    changepoints followed, with probability ``mutation_rate``, by adding,
    deleting or jittering one changepoint. Stops after ``max_generations``
    or ``stagnation`` generations without improvement, then runs a greedy
    single-move descent when ``polish`` is set. Descent starts from the
    ``polish_starts`` best distinct configurations evaluated and from the
    best configuration of each changepoint count up to
    ``max(polish_counts, 2 m)``, with ``m`` the count of the best one.
    Objective values are memoized per call. Deterministic for a given seed.
    """
    gp = ga_params or GAParams()
    n = series.n
    base = objective or Objective(series, penalty_kind, mean_model_kind, p, min_seg)
    rng = np.random.default_rng(seed)
    cache: dict = {}

    def obj(t):
        if t not in cache:
            cache[t] = base(t)
        return cache[t]

    pop = [()]
    pop.extend(_repair(t, n, min_seg) for t in initial)
    while len(pop) < gp.population:
        pop.append(_random_config(rng, n, min_seg))
    fitness = np.array([obj(t) for t in pop])

    best_val = fitness.min()
    stale = 0
    for _ in range(gp.max_generations):
        order = np.argsort(fitness, kind="stable")
        children = [pop[i] for i in order[: gp.elitism]]
        children.extend(_random_config(rng, n, min_seg) for _ in range(gp.immigrants))
        while len(children) < gp.population:
            picks = rng.integers(0, gp.population, size=(2, gp.tournament))
            ia = picks[0][np.argmin(fitness[picks[0]])]
            ib = picks[1][np.argmin(fitness[picks[1]])]
            child = _crossover(rng, pop[ia], pop[ib], n, min_seg)
            if rng.random() < gp.mutation_rate:
                child = _mutate(rng, child, n, min_seg, gp.jitter)
            children.append(child)
        pop = children
        fitness = np.array([obj(t) for t in pop])
        gen_best = fitness.min()
        if gen_best < best_val - 1e-12:
            best_val, stale = gen_best, 0
        else:
            stale += 1
            if stale >= gp.stagnation:
                break

    best = pop[int(np.argmin(fitness))]
    if gp.polish:
        # descend from the few best distinct configurations seen, and from the
        # best one of each changepoint count, not only the winner
        ranked = sorted(cache, key=cache.get)
        starts = ranked[: max(1, gp.polish_starts)]
        per_m = {}
        cap = max(gp.polish_counts, 2 * len(ranked[0]))
        for t in ranked:
            if len(t) <= cap:
                per_m.setdefault(len(t), t)
        starts += [t for t in per_m.values() if t not in starts]
        ends = [_polish(obj, t, n, min_seg, base.feasible) for t in starts]
        best = min(ends, key=obj)
    return base.fit(best)


@dataclass
class SearchResult:
    method: str
    config: ChangepointConfig
    fit: PenalizedFit
    series: TimeSeries = field(repr=False)
    mean_model_kind: MeanKind = MeanKind.CONSTANT
    p: int = 0
    penalty_kind: PenaltyKind | None = None
    seed: int | None = None
    tests: list = field(default_factory=list, repr=False)

    @property
    def changepoint_labels(self) -> list:
        return self.config.labels(self.series)

    def to_text(self) -> str:
        return format_search_result(self)


def binary_segmentation(series: TimeSeries, mean_model_kind="constant", p: int = 1,
                        alpha: float = 0.05, min_seg: int = MIN_SEG, nulls=None,
                        penalty_kind="bic") -> SearchResult:
    """Recursive AMOC splitting with pre-whitened SCUSUM (CUSUM_D for trends).

    A segment is tested when it has at least ``2 * min_seg`` observations and
    enough to fit its AR model; if the test rejects at level ``alpha`` the
    segment is split just after the CUSUM argmax ``k``, i.e. the new regime
    starts at the segment's ``(k + 1)``-th observation. The final
    configuration is scored under ``penalty_kind`` for reporting only.
    """
    kind = MeanKind.parse(mean_model_kind)
    n = series.n
    need = max(2 * min_seg, 4, p + n_mean_params(kind, series.period) + 3)
    taus = []
    tests: list[AmocResult] = []
    stack = [(1, n + 1)]
    while stack:
        a, b = stack.pop()
        if b - a < need:
            continue
        seg = series.segment(a, b)
        try:
            res = amoc_pipeline(seg, kind, p, nulls)
        except ClimShiftError:
            continue
        tests.append(res)
        if not res.p_value < alpha:
            continue
        tau = a + res.changepoint_estimate
        if tau - a < min_seg or b - tau < min_seg:
            continue
        taus.append(tau)
        stack.append((tau, b))
        stack.append((a, tau))
    config = ChangepointConfig(tuple(sorted(taus)), n)
    fit = Objective(series, penalty_kind, kind, p, min_seg).fit(config.taus)
    return SearchResult("binseg", config, fit, series, kind, p, PenaltyKind.parse(penalty_kind),
                        None, tests)


def search_result_from_fit(method, fit: PenalizedFit, series, kind, p, seed=None) -> SearchResult:
    return SearchResult(method, fit.config, fit, series, MeanKind.parse(kind), p, fit.penalty_kind, seed)


# --- text serialization -----------------------------------------------------

_FMT = "{:.6g}"


def _g(x) -> str:
    return _FMT.format(float(x))


def format_search_result(res: SearchResult) -> str:
    """Line-oriented text: header, one line per changepoint, footer."""
    fit = res.fit
    lines = [
        "# climshift search result v1",
        f"method: {res.method}",
        f"penalty: {res.penalty_kind.value if res.penalty_kind else 'none'}",
        f"mean_model: {res.mean_model_kind.value}",
        f"ar_order: {res.p}",
        f"seed: {'none' if res.seed is None else res.seed}",
        f"n: {res.series.n}",
        f"changepoints: {res.config.m}",
    ]
    means = fit.segment_means()
    for i, tau in enumerate(res.config.taus, start=1):
        lines.append(
            f"cp {i} index={tau} label={res.series.time_label(tau)} segment_mean={_g(means[i])}"
        )
    ar = fit.error_model
    lines += [
        f"first_segment_mean: {_g(means[0])}",
        f"objective: {_g(fit.objective)}",
        f"minus2loglik: {_g(fit.minus2loglik)}",
        f"penalty_value: {_g(fit.penalty)}",
        "ar_phi: " + (" ".join(_g(v) for v in ar.phi) if ar.order else "none"),
        f"sigma2: {_g(ar.sigma2)}",
    ]
    if res.mean_model_kind is MeanKind.TREND:
        lines.append(f"trend_slope: {_g(fit.mean_model.beta1)}")
    return "\n".join(lines) + "\n"


def parse_search_result(text: str) -> dict:
    """Parse :func:`format_search_result` output into plain Python values."""
    out = {"changepoints_list": []}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("cp "):
            parts = dict(kv.split("=", 1) for kv in line.split()[2:])
            out["changepoints_list"].append(
                {"index": int(parts["index"]), "label": int(parts["label"]),
                 "segment_mean": float(parts["segment_mean"])}
            )
            continue
        key, _, val = line.partition(":")
        val = val.strip()
        if key in ("ar_order", "n", "changepoints"):
            out[key] = int(val)
        elif key == "seed":
            out[key] = None if val == "none" else int(val)
        elif key == "ar_phi":
            out[key] = [] if val == "none" else [float(v) for v in val.split()]
        elif key in ("objective", "minus2loglik", "penalty_value", "sigma2", "trend_slope",
                     "first_segment_mean"):
            out[key] = float(val)
        else:
            out[key] = val
    if len(out["changepoints_list"]) != out.get("changepoints", 0):
        raise ValueError("changepoint count does not match the listed changepoints")
    return out
