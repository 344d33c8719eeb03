"""Dataset ingestion, caching and synthetic series.

Analysis never touches the network: :func:`fetch` downloads raw files into
``<cache>/<source>/<filename>`` and :func:`load` reads them from there. The
cache root is ``$CLIMSHIFT_CACHE`` or ``~/.cache/climshift``.
"""
from __future__ import annotations

import csv
import io
import os
import urllib.request
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DatasetNotFound, MissingValueInRange, ParseError
from .likelihood import ChangepointConfig
from .series import TimeSeries

__all__ = [
    "Source",
    "DatasetSpec",
    "SimSpec",
    "cache_root",
    "preset",
    "load",
    "load_local_values",
    "fetch",
    "write_csv",
    "simulate",
    "fig5_spec",
]

CACHE_ENV = "CLIMSHIFT_CACHE"
CET_MISSING = -99.9
NSIDC_MISSING = -9999.0


class Source(str, Enum):
    CET = "cet"
    BERKELEY = "atlanta"
    NSIDC = "seaice"
    LOCAL = "local"


# filename in the cache, download URL (None: user supplies the file)
_REMOTE = {
    Source.CET: ("meantemp_monthly_totals.txt",
                 "https://www.metoffice.gov.uk/hadobs/hadcet/data/meantemp_monthly_totals.txt"),
    Source.NSIDC: ("N_09_extent_v3.0.csv",
                   "https://noaadata.apps.nsidc.org/NOAA/G02135/north/monthly/data/N_09_extent_v3.0.csv"),
    Source.BERKELEY: ("atlanta_annual.csv", None),
}

_PRESET_YEARS = {
    Source.CET: (1900, 2020),
    Source.NSIDC: (1979, 2021),
    Source.BERKELEY: (1879, 2013),
}

_LABELS = {
    Source.CET: "Central England temperature (annual mean, degC)",
    Source.NSIDC: "Northern hemisphere September sea ice extent (million km2)",
    Source.BERKELEY: "Atlanta Hartsfield airport annual mean temperature (degC, raw)",
}


def cache_root() -> Path:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else Path.home() / ".cache" / "climshift"


def cache_path(source) -> Path:
    source = Source(source)
    return cache_root() / source.value / _REMOTE[source][0]


@dataclass(frozen=True)
class DatasetSpec:
    source: Source
    path: str
    year_range: tuple
    year_column: str = "year"
    value_column: str = "value"

    def __post_init__(self):
        object.__setattr__(self, "source", Source(self.source))
        start, end = (int(y) for y in self.year_range)
        if end < start:
            raise ValueError(f"empty year range {start}..{end}")
        object.__setattr__(self, "year_range", (start, end))


def preset(name: str, years=None, path=None) -> DatasetSpec:
    """Spec for one of the bundled analyses (``cet``, ``seaice``, ``atlanta``)."""
    source = Source(name)
    if source is Source.LOCAL:
        if path is None or years is None:
            raise ValueError("local datasets need an explicit path and year range")
        return DatasetSpec(source, str(path), tuple(years))
    return DatasetSpec(source, str(path or cache_path(source)), tuple(years or _PRESET_YEARS[source]))


def _read_text(path: Path) -> str:
    if not path.is_file():
        raise DatasetNotFound(
            f"{path} not found; run `climshift fetch` or place the file there "
            f"(cache root from ${CACHE_ENV})"
        )
    return path.read_text(encoding="utf-8-sig")


def _parse_float(tok, lineno, path):
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"not a number: {tok!r}", lineno, path) from None


def parse_cet(text: str, path=None) -> dict:
    """Met Office HadCET monthly-totals table -> {year: annual mean}.

    Data rows are ``year`` followed by 12 monthly means and the annual mean;
    header and note lines (anything not starting with a year) are skipped.
    """
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = line.split()
        if not toks or not toks[0].isdigit() or len(toks[0]) != 4:
            continue
        if len(toks) != 14:
            raise ParseError(f"expected year + 12 months + annual (14 fields), got {len(toks)}",
                             lineno, path)
        vals = [_parse_float(t, lineno, path) for t in toks[1:]]
        out[int(toks[0])] = vals[-1]
    if not out:
        raise ParseError("no data rows found", None, path)
    return out


def _csv_rows(text: str):
    sniff = text.lstrip().splitlines()[0] if text.strip() else ""
    delim = "," if "," in sniff else None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith(("%", "#")):
            continue
        toks = [t.strip() for t in (line.split(delim) if delim else line.split())]
        yield lineno, toks


def parse_nsidc(text: str, path=None) -> dict:
    """NSIDC monthly extent CSV -> {year: extent}. Needs ``year`` and ``extent`` columns."""
    rows = _csv_rows(text)
    header = None
    out = {}
    for lineno, toks in rows:
        if header is None:
            header = [t.lower() for t in toks]
            if "year" not in header or "extent" not in header:
                raise ParseError("header must contain 'year' and 'extent' columns", lineno, path)
            iy, iv = header.index("year"), header.index("extent")
            continue
        if len(toks) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(toks)}", lineno, path)
        year = int(_parse_float(toks[iy], lineno, path))
        out[year] = _parse_float(toks[iv], lineno, path)
    return out


def parse_berkeley(text: str, path=None) -> dict:
    """Berkeley Earth style station text -> {year: annual mean}.

    ``%``/``#`` lines are comments. Rows are either ``year value`` or
    ``year month value ...``; monthly rows are averaged into years that have
    all twelve months. A ``year,value`` CSV with a header is also accepted.
    """
    annual, monthly = {}, {}
    for lineno, toks in _csv_rows(text):
        if not toks[0].replace(".", "", 1).lstrip("-").isdigit():
            continue  # header row
        if len(toks) >= 3 and toks[1].isdigit() and 1 <= int(toks[1]) <= 12 and "." not in toks[0]:
            monthly.setdefault(int(toks[0]), {})[int(toks[1])] = _parse_float(toks[2], lineno, path)
        elif len(toks) >= 2:
            annual[int(_parse_float(toks[0], lineno, path))] = _parse_float(toks[1], lineno, path)
        else:
            raise ParseError("expected at least year and value", lineno, path)
    for year, months in monthly.items():
        if len(months) == 12 and all(np.isfinite(v) for v in months.values()):
            annual.setdefault(year, float(np.mean(list(months.values()))))
    return annual


def parse_local_csv(text: str, year_column="year", value_column="value", path=None) -> dict:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", 1, path) from None
    for col in (year_column, value_column):
        if col not in header:
            raise ParseError(f"column {col!r} not in header {header}", 1, path)
    iy, iv = header.index(year_column), header.index(value_column)
    out = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, path)
        out[int(_parse_float(row[iy], lineno, path))] = _parse_float(row[iv], lineno, path)
    return out


def _restrict(table: dict, years, missing, path, label, source) -> TimeSeries:
    start, end = years
    vals = []
    for y in range(start, end + 1):
        v = table.get(y)
        if v is None or not np.isfinite(v) or (missing is not None and np.isclose(v, missing)):
            raise MissingValueInRange(f"{path}: no valid value for {y} (range {start}-{end})")
        vals.append(v)
    return TimeSeries(np.array(vals), period=1, label=label, start_year=start)


def load(spec: DatasetSpec) -> TimeSeries:
    """Annual series for ``spec.year_range`` (inclusive)."""
    path = Path(spec.path)
    text = _read_text(path)
    if spec.source is Source.CET:
        table, missing = parse_cet(text, path), CET_MISSING
    elif spec.source is Source.NSIDC:
        table, missing = parse_nsidc(text, path), NSIDC_MISSING
    elif spec.source is Source.BERKELEY:
        table, missing = parse_berkeley(text, path), None
    else:
        table, missing = parse_local_csv(text, spec.year_column, spec.value_column, path), None
    label = _LABELS.get(spec.source, path.stem)
    return _restrict(table, spec.year_range, missing, path, label, spec.source)


def load_local_values(path, period: int = 1, value_column="value", year_column="year",
                      label=None) -> TimeSeries:
    """Series of every row of a local CSV, in file order, with the given period.

    For sub-annual data (e.g. ``year,month,value`` rows); the first row's
    year becomes ``start_year`` when a year column is present.
    """
    path = Path(path)
    reader = csv.reader(io.StringIO(_read_text(path)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file", 1, path) from None
    if value_column not in header:
        raise ParseError(f"column {value_column!r} not in header {header}", 1, path)
    iv = header.index(value_column)
    iy = header.index(year_column) if year_column in header else None
    vals, first_year = [], None
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, path)
        v = _parse_float(row[iv], lineno, path)
        if not np.isfinite(v):
            raise MissingValueInRange(f"{path}: missing value on line {lineno}")
        if iy is not None and first_year is None:
            first_year = int(_parse_float(row[iy], lineno, path))
        vals.append(v)
    return TimeSeries(np.array(vals), period=period, label=label or path.stem,
                      start_year=first_year)


def fetch(source, url: str | None = None, timeout: float = 60.0) -> Path:
    """Download a raw dataset file into the cache and return its path."""
    source = Source(source)
    if source is Source.LOCAL:
        raise ValueError("local datasets are not fetched")
    filename, default_url = _REMOTE[source]
    url = url or default_url
    if url is None:
        raise ValueError(
            f"no public URL is known for {source.value}; pass --url or copy a year,value CSV to "
            f"{cache_path(source)}"
        )
    dest = cache_path(source)
    dest.parent.mkdir(parents=True, exist_ok=True)
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        data = resp.read()
    tmp = dest.with_suffix(dest.suffix + ".part")
    tmp.write_bytes(data)
    tmp.replace(dest)
    return dest


def write_csv(series: TimeSeries, path) -> Path:
    """``year,value`` CSV (UTF-8, LF); values written with full float precision."""
    path = Path(path)
    start = series.start_year if series.start_year is not None else 1
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("year,value\n")
        for i, v in enumerate(series.values):
            fh.write(f"{start + i},{float(v)!r}\n")
    return path


# --- synthetic series --------------------------------------------------------


@dataclass(frozen=True)
class SimSpec:
    """Piecewise-constant mean plus IID or AR(1) Gaussian noise.

    ``means`` has one entry per regime; ``taus`` are the regime start times.
    ``sd`` is the innovation standard deviation.
    """

    n: int
    means: tuple = (0.0,)
    taus: tuple = ()
    error: str = "iid"
    phi: float = 0.0
    sd: float = 1.0
    seed: int = 0
    start_year: int | None = None
    label: str = "simulated"

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "taus", tuple(int(t) for t in self.taus))
        ChangepointConfig(self.taus, self.n)  # validates ordering and range
        if len(self.means) != len(self.taus) + 1:
            raise ValueError("need one mean per regime (len(taus) + 1)")
        if self.error not in ("iid", "ar1"):
            raise ValueError("error must be 'iid' or 'ar1'")
        if self.error == "ar1" and not abs(self.phi) < 1:
            raise ValueError("AR(1) coefficient must satisfy |phi| < 1")


def simulate(spec: SimSpec) -> tuple[TimeSeries, ChangepointConfig]:
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal(spec.n) * spec.sd
    if spec.error == "ar1" and spec.phi != 0.0:
        eps = np.empty(spec.n)
        eps[0] = z[0] / np.sqrt(1.0 - spec.phi**2)
        for t in range(1, spec.n):
            eps[t] = spec.phi * eps[t - 1] + z[t]
    else:
        eps = z
    config = ChangepointConfig(spec.taus, spec.n)
    mean = np.asarray(spec.means)[config.regime_of()]
    ts = TimeSeries(mean + eps, period=1, label=spec.label, start_year=spec.start_year)
    return ts, config


def fig5_spec(shift: float = 1.0, seed: int = 0, n: int = 500, sd: float = 1.0) -> SimSpec:
    """Three equally spaced shifts alternating up/down/up (means 0, s, 0, s)."""
    q = n // 4
    return SimSpec(n, (0.0, shift, 0.0, shift), (q + 1, 2 * q + 1, 3 * q + 1), "iid", 0.0, sd, seed)
