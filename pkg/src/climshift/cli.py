"""Command-line front end.

Every command writes plain text and CSV into ``--output`` (default: the
current directory). Numbers are formatted to 6 significant digits so runs
with a fixed seed are byte-identical. Exit status is 0 when the analysis
completed, 2 for bad arguments and 3 for data or model errors; whether a
changepoint was found is report content, never exit status.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import datasets
from .amoc import amoc_pipeline
from .armodel import MeanKind, fit_ar, prewhiten
from .errors import ClimShiftError
from .likelihood import PenaltyKind
from .nulldist import (
    SHIPPED_GRID,
    SHIPPED_M,
    SHIPPED_SEED,
    NullKind,
    save_nulltab,
    shipped_filename,
    simulate_nulls,
)
from .search import (
    binary_segmentation,
    exhaustive_search,
    format_search_result,
    ga_search,
    search_result_from_fit,
)
from .series import TimeSeries, acf, difference, normality_test, seasonal_stats, standardize
from .simstudy import METHODS, simulation_study

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3


class UsageError(Exception):
    pass


def _g(x) -> str:
    return f"{float(x):.6g}"


def _years(text):
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:END, got {text!r}") from None


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else
                              (str(c) if isinstance(c, (int, np.integer)) else _g(c)) for c in row))
    _write(path, "\n".join(lines) + "\n")


def _outdir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(args) -> TimeSeries:
    if args.dataset == "local" and args.path is None:
        raise UsageError("--dataset local needs --path")
    if args.dataset == "local" and args.years is None:
        raise UsageError("--dataset local needs --years")
    spec = datasets.preset(args.dataset, args.years, args.path)
    return datasets.load(spec)


def _ar_text(fit) -> str:
    if fit is None or fit.order == 0:
        return "none"
    return " ".join(_g(v) for v in fit.phi)


# --- commands ----------------------------------------------------------------


def cmd_fetch(args) -> int:
    if args.dataset == "local":
        raise UsageError("local datasets are not fetched")
    try:
        path = datasets.fetch(args.dataset, args.url)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except OSError as exc:
        print(f"error: download failed: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"saved {path}")
    return EXIT_OK


_MODEL_TEXT = {
    (MeanKind.CONSTANT, False): ("Mean shift + IID errors", "SCUSUM"),
    (MeanKind.CONSTANT, True): ("Mean shift + AR({p}) errors", "SCUSUM_Z"),
    (MeanKind.SEASONAL, False): ("Seasonal mean shift + IID errors", "SCUSUM"),
    (MeanKind.SEASONAL, True): ("Seasonal mean shift + AR({p}) errors", "SCUSUM_Z"),
    (MeanKind.TREND, False): ("Fixed trend + IID errors", "CUSUM_D"),
    (MeanKind.TREND, True): ("Fixed trend + AR({p}) errors", "CUSUM_D"),
}


def cmd_amoc(args) -> int:
    series = _load_series(args)
    kind = MeanKind.parse(args.mean)
    res = amoc_pipeline(series, kind, args.ar)
    model, test = _MODEL_TEXT[(kind, args.ar >= 1)]
    sig = res.significant(args.alpha)
    level = _g(100 * (1 - args.alpha))
    lines = [
        "Single changepoint test",
        f"series: {series.label}",
        f"years: {series.time_label(1)}-{series.time_label(series.n)} (N={series.n})",
        f"model: {model.format(p=args.ar)}",
        f"test: {test}",
        f"statistic: {_g(res.statistic)}",
        f"p_value: {_g(res.p_value)}",
    ]
    lines += [f"critical_{_g(q)}: {_g(v)}" for q, v in res.critical_values.items()]
    lines += [
        f"changepoint_index: {res.changepoint_estimate}",
        f"changepoint_year: {res.changepoint_label}",
        f"ar_phi: {_ar_text(res.fit)}",
    ]
    if kind is MeanKind.TREND and res.fit is not None:
        mm = res.fit.mean_model
        lines += [f"trend_intercept: {_g(mm.beta0)}", f"trend_slope: {_g(mm.beta1)}"]
    lines.append(f"decision: {'changepoint' if sig else 'no changepoint'} at {level}%")
    report = "\n".join(lines) + "\n"
    out = _outdir(args)
    _write(out / "amoc_report.txt", report)
    _write_csv(out / "cusum_trace.csv", ["k", "year", "cusum"],
               [(k, series.time_label(k), c) for k, c in enumerate(res.trace, start=1)])
    sys.stdout.write(report)
    return EXIT_OK


def cmd_mcpt(args) -> int:
    series = _load_series(args)
    kind = MeanKind.parse(args.mean)
    if args.method == "binseg":
        res = binary_segmentation(series, kind, args.ar, args.alpha, penalty_kind=args.penalty)
    elif args.method == "exhaustive":
        fit = exhaustive_search(series, args.penalty, kind, args.ar, args.max_m)
        res = search_result_from_fit("exhaustive", fit, series, kind, args.ar)
    else:
        fit = ga_search(series, args.penalty, kind, args.ar, seed=args.seed)
        res = search_result_from_fit("ga", fit, series, kind, args.ar, args.seed)
    text = format_search_result(res)
    out = _outdir(args)
    _write(out / "mcpt_report.txt", text)
    b = res.config.boundaries
    means = res.fit.segment_means()
    _write_csv(out / "segments.csv", ["start", "end", "mean"],
               [(series.time_label(b[i]), series.time_label(b[i + 1] - 1), means[i])
                for i in range(len(b) - 1)])
    _write_csv(out / "fitted.csv", ["t", "year", "value", "fitted_mean"],
               [(t, series.time_label(t), v, f) for t, (v, f)
                in enumerate(zip(series.values, res.fit.fitted_mean), start=1)])
    sys.stdout.write(text)
    return EXIT_OK


def cmd_simstudy(args) -> int:
    res = simulation_study(args.replicates, args.seed, args.shift, p=args.ar, bs_p=args.bs_ar,
                           alpha=args.alpha, n_jobs=args.jobs)
    out = _outdir(args)
    rows = [(r + 1, k, res.distances[k][r], res.m_hat[k][r])
            for k in METHODS for r in range(res.replicates)]
    _write_csv(out / "distances.csv", ["replicate", "method", "distance", "m_hat"], rows)
    means = res.mean_distance()
    frac3 = res.fraction_m(len(res.truth))
    lines = [
        "Simulation study: three alternating shifts, N=500, white noise",
        f"replicates: {res.replicates}",
        f"seed: {res.seed}",
        f"shift: {_g(res.shift)}",
        f"truth: {' '.join(str(t) for t in res.truth)}",
        "method,mean_distance,median_m_hat,fraction_true_m",
    ]
    for k in METHODS:
        lines.append(f"{k},{_g(means[k])},{_g(np.median(res.m_hat[k]))},{_g(frac3[k])}")
    text = "\n".join(lines) + "\n"
    _write(out / "simstudy_summary.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.period > 1 or args.dataset == "local" and args.years is None:
        if args.path is None:
            raise UsageError("sub-annual diagnosis needs --dataset local --path FILE")
        series = datasets.load_local_values(args.path, args.period)
    else:
        series = _load_series(args)
    if args.reference is not None:
        ref = datasets.load_local_values(args.reference, series.period)
        series = difference(series, ref)
    stats = seasonal_stats(series)
    out = _outdir(args)
    _write_csv(out / "seasonal_stats.csv", ["season", "mean", "std_dev"],
               [(v + 1, m, s) for v, (m, s) in enumerate(zip(stats.means, stats.std_devs))])
    z = standardize(series, stats)
    std = z.values
    max_lag = min(args.max_lag, series.n - 1)
    ac = acf(z, max_lag)
    _write_csv(out / "acf.csv", ["lag", "acf", "band"],
               [(int(h), r, ac.white_noise_band) for h, r in zip(ac.lags, ac.correlations)])
    lines = [
        "Series diagnostics",
        f"series: {series.label}",
        f"n: {series.n}",
        f"period: {series.period}",
        f"differenced_against_reference: {'yes' if args.reference else 'no'}",
        f"acf_band: {_g(ac.white_noise_band)}",
        f"acf_lags_outside_band: {int(ac.outside_band().sum())} of {max_lag}",
    ]
    if 3 <= series.n <= 5000:
        fit = fit_ar(series, MeanKind.SEASONAL if series.period > 1 else MeanKind.CONSTANT,
                     args.ar) if args.ar >= 1 else None
        resid = prewhiten(series, fit).values if fit else std
        w, p = normality_test(resid)
        lines.append(f"normality_W: {_g(w)}")
        lines.append(f"normality_p: {_g(p)}")
    text = "\n".join(lines) + "\n"
    _write(out / "diagnose_report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_nulltab(args) -> int:
    kinds = [NullKind(k) for k in args.kind] if args.kind else list(NullKind)
    nulls = simulate_nulls(kinds, args.grid, args.m, args.seed, args.jobs)
    out = _outdir(args)
    for k in kinds:
        path = save_nulltab(nulls[k], out / shipped_filename(k))
        cv = nulls[k].critical_values()
        print(f"{path}: " + " ".join(f"{_g(q)}%={_g(v)}" for q, v in cv.items()))
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="climshift",
                                     description="Changepoint analysis of climate series.")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_opts(p):
        p.add_argument("--dataset", choices=[s.value for s in datasets.Source], default="cet")
        p.add_argument("--path", help="read this file instead of the cache copy")
        p.add_argument("--years", type=_years, help="inclusive range START:END")

    def common(p, ar_default=1):
        p.add_argument("--ar", type=int, default=ar_default, help="AR order of the errors")
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--output", default=".", help="directory for report and CSV files")

    p = sub.add_parser("fetch", help="download a raw dataset into the cache")
    p.add_argument("--dataset", choices=[s.value for s in datasets.Source], required=True)
    p.add_argument("--url", help="override the download URL")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("diagnose", help="seasonal statistics, ACF and normality")
    data_opts(p)
    common(p, ar_default=0)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--reference", help="year,value CSV subtracted from the target")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("amoc", help="single changepoint test")
    data_opts(p)
    common(p)
    p.add_argument("--mean", choices=[k.value for k in MeanKind], default="constant")
    p.set_defaults(func=cmd_amoc)

    p = sub.add_parser("mcpt", help="multiple changepoint search")
    data_opts(p)
    common(p)
    p.add_argument("--mean", choices=[k.value for k in MeanKind], default="constant")
    p.add_argument("--method", choices=["ga", "binseg", "exhaustive"], default="ga")
    p.add_argument("--penalty", choices=[k.value for k in PenaltyKind], default="bic")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--max-m", type=int, default=None)
    p.set_defaults(func=cmd_mcpt)

    p = sub.add_parser("simstudy", help="binary segmentation vs penalized likelihood")
    common(p, ar_default=0)
    p.add_argument("--bs-ar", type=int, default=1, help="AR order used by binary segmentation")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--shift", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_simstudy)

    p = sub.add_parser("nulltab", help="regenerate Monte Carlo null tables")
    p.add_argument("--output", default=".")
    p.add_argument("--kind", action="append", choices=[k.value for k in NullKind])
    p.add_argument("--m", type=int, default=SHIPPED_M)
    p.add_argument("--grid", type=int, default=SHIPPED_GRID)
    p.add_argument("--seed", type=int, default=SHIPPED_SEED)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_nulltab)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad arguments
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ClimShiftError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
