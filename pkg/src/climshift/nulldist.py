"""Monte Carlo null distributions for the AMOC statistics.

Three limit laws are tabulated from discretized Brownian bridges on an
``N_grid``-point grid:

* ``integrated_bridge_squared`` -- ``int_0^1 B(t)^2 dt`` (SCUSUM),
* ``sup_bridge`` -- ``sup |B(t)|`` (max-CUSUM, constant mean),
* ``sup_trend_adjusted`` -- ``sup |B_2(t)|`` where ``B_2`` is the partial-sum
  limit of residuals from a fitted intercept and linear trend (CUSUM_D).

The supremum of a discretely sampled path sits below the continuous
supremum by about ``0.5826 / sqrt(N_grid)`` (the Broadie-Glasserman-Kou
shift, ``-zeta(1/2) / sqrt(2 pi)``); that shift is added to the two sup
kinds so the tables target the continuous limit.

Draws are produced in fixed-size chunks, each seeded from ``(seed,
chunk_index)``; results are identical for any number of worker processes.
"""
from __future__ import annotations

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import NullTableError

__all__ = [
    "NullKind",
    "NullDistribution",
    "simulate_null",
    "simulate_nulls",
    "save_nulltab",
    "load_nulltab",
    "shipped_null",
    "DISCRETE_SUP_SHIFT",
]

DISCRETE_SUP_SHIFT = 0.5825971579390106  # -zeta(1/2) / sqrt(2 pi)
CHUNK = 250

SHIPPED_M = 200_000
SHIPPED_GRID = 10_000
SHIPPED_SEED = 20220901

_MAGIC = b"NULLTAB1"
_HEADER = struct.Struct("<8s32sQQq")


class NullKind(str, Enum):
    INTEGRATED_BRIDGE_SQUARED = "integrated_bridge_squared"
    SUP_BRIDGE = "sup_bridge"
    SUP_TREND_ADJUSTED = "sup_trend_adjusted"


@dataclass(frozen=True)
class NullDistribution:
    """Sorted Monte Carlo sample of a limit law."""

    kind: NullKind
    sample: np.ndarray
    n_grid: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "kind", NullKind(self.kind))
        arr = np.sort(np.asarray(self.sample, dtype=float))
        arr.setflags(write=False)
        object.__setattr__(self, "sample", arr)

    @property
    def m(self) -> int:
        return self.sample.size

    def p_value(self, statistic: float) -> float:
        """Right-tail proportion with a +1 correction: ``(1 + #{null >= s}) / (M + 1)``."""
        exceed = self.m - np.searchsorted(self.sample, statistic, side="left")
        return float((1 + exceed) / (self.m + 1))

    def quantile(self, q):
        return np.quantile(self.sample, q)

    def critical_values(self, percentiles=(90.0, 95.0, 97.5, 99.0)) -> dict:
        return {float(pc): float(self.quantile(pc / 100.0)) for pc in percentiles}


def _chunk_functionals(args):
    n_grid, seed, index, size, kinds = args
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))
    e = rng.standard_normal((size, n_grid))
    S = np.cumsum(e, axis=1)
    t = np.arange(1, n_grid + 1, dtype=float)
    out = {}
    scale = 1.0 / np.sqrt(n_grid)
    if NullKind.INTEGRATED_BRIDGE_SQUARED in kinds or NullKind.SUP_BRIDGE in kinds:
        B = S - np.outer(S[:, -1], t / n_grid)
        if NullKind.INTEGRATED_BRIDGE_SQUARED in kinds:
            out[NullKind.INTEGRATED_BRIDGE_SQUARED] = np.einsum("ij,ij->i", B, B) * scale**2 / n_grid
        if NullKind.SUP_BRIDGE in kinds:
            out[NullKind.SUP_BRIDGE] = np.abs(B).max(axis=1) * scale
        del B
    if NullKind.SUP_TREND_ADJUSTED in kinds:
        # partial sums of residuals after regressing the increments on (1, t)
        tc = t - t.mean()
        slope = (e @ tc) / np.dot(tc, tc)
        icpt = S[:, -1] / n_grid - slope * t.mean()
        R = S - np.outer(icpt, t) - np.outer(slope, t * (t + 1) / 2)
        out[NullKind.SUP_TREND_ADJUSTED] = np.abs(R).max(axis=1) * scale
    return out


def simulate_nulls(kinds, n_grid: int = SHIPPED_GRID, m: int = SHIPPED_M, seed: int = 0,
                   n_jobs: int = 1) -> dict:
    """Simulate several null laws from one shared set of bridge paths.

    Each kind's sample depends only on ``(seed, n_grid, m)``, not on which
    other kinds are requested nor on ``n_jobs``.
    """
    kinds = frozenset(NullKind(k) for k in kinds)
    if n_grid < 1000:
        raise ValueError("n_grid must be >= 1000")
    if m < 10_000:
        raise ValueError("m must be >= 10000")
    tasks = [
        (n_grid, int(seed), i, min(CHUNK, m - start), kinds)
        for i, start in enumerate(range(0, m, CHUNK))
    ]
    if n_jobs == 1:
        parts = [_chunk_functionals(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            parts = list(ex.map(_chunk_functionals, tasks, chunksize=4))
    result = {}
    for k in kinds:
        sample = np.concatenate([p[k] for p in parts])
        if k is not NullKind.INTEGRATED_BRIDGE_SQUARED:
            sample = sample + DISCRETE_SUP_SHIFT / np.sqrt(n_grid)
        result[k] = NullDistribution(k, sample, n_grid, int(seed))
    return result


def simulate_null(kind, n_grid: int = SHIPPED_GRID, m: int = SHIPPED_M, seed: int = 0,
                  n_jobs: int = 1) -> NullDistribution:
    kind = NullKind(kind)
    return simulate_nulls([kind], n_grid, m, seed, n_jobs)[kind]


def save_nulltab(null: NullDistribution, path) -> Path:
    """Write a ``.nulltab`` file: 64-byte header then ``M`` little-endian float64."""
    path = Path(path)
    header = _HEADER.pack(_MAGIC, null.kind.value.encode("ascii"), null.m, null.n_grid, null.seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(null.sample, dtype="<f8").tobytes())
    return path


def _read_nulltab_bytes(raw: bytes, source="<bytes>") -> NullDistribution:
    if len(raw) < _HEADER.size:
        raise NullTableError(f"{source}: truncated header")
    magic, kind, m, n_grid, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise NullTableError(f"{source}: not a .nulltab file")
    body = raw[_HEADER.size:]
    if len(body) != 8 * m:
        raise NullTableError(f"{source}: expected {m} values, found {len(body) / 8:g}")
    try:
        kind = NullKind(kind.rstrip(b"\0").decode("ascii"))
    except ValueError as exc:
        raise NullTableError(f"{source}: unknown kind {kind!r}") from exc
    sample = np.frombuffer(body, dtype="<f8").astype(float)
    if np.any(np.diff(sample) < 0):
        raise NullTableError(f"{source}: sample is not sorted")
    return NullDistribution(kind, sample, int(n_grid), int(seed))


def load_nulltab(path) -> NullDistribution:
    path = Path(path)
    return _read_nulltab_bytes(path.read_bytes(), path)


def shipped_filename(kind) -> str:
    return f"{NullKind(kind).value}.nulltab"


@lru_cache(maxsize=None)
def shipped_null(kind) -> NullDistribution:
    """Null table bundled with the package (M=200 000, N_grid=10 000)."""
    kind = NullKind(kind)
    ref = resources.files("climshift") / "data" / shipped_filename(kind)
    try:
        raw = ref.read_bytes()
    except FileNotFoundError as exc:
        raise NullTableError(
            f"shipped table {shipped_filename(kind)} missing; regenerate with `climshift nulltab`"
        ) from exc
    return _read_nulltab_bytes(raw, shipped_filename(kind))


def build_shipped_tables(directory=None, n_jobs: int = 1) -> list[Path]:
    """Regenerate the bundled tables with their fixed seed."""
    directory = Path(directory) if directory else Path(str(resources.files("climshift") / "data"))
    directory.mkdir(parents=True, exist_ok=True)
    nulls = simulate_nulls(list(NullKind), SHIPPED_GRID, SHIPPED_M, SHIPPED_SEED, n_jobs)
    shipped_null.cache_clear()
    return [save_nulltab(nulls[k], directory / shipped_filename(k)) for k in NullKind]
