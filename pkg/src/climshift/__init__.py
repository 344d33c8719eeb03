"""Changepoint detection for climate series: single-change CUSUM tests with
autoregressive pre-whitening and penalized-likelihood multiple-changepoint
search."""
from .amoc import AmocResult, amoc_pipeline, cusum, max_cusum_test, scusum_test
from .armodel import ArFit, MeanKind, MeanModel, fit_ar, long_run_variance, prewhiten, select_order
from .datasets import DatasetSpec, SimSpec, fetch, fig5_spec, load, preset, simulate, write_csv
from .errors import *  # noqa: F401,F403
from .likelihood import ChangepointConfig, Objective, PenalizedFit, PenaltyKind, gaussian_loglik, penalty
from .nulldist import NullDistribution, NullKind, load_nulltab, save_nulltab, shipped_null, simulate_null
from .search import (
    GAParams,
    SearchResult,
    binary_segmentation,
    exhaustive_search,
    format_search_result,
    ga_search,
    parse_search_result,
)
from .series import (
    AcfResult,
    SeasonalStats,
    TimeSeries,
    acf,
    difference,
    normality_test,
    seasonal_stats,
    standardize,
)
from .simstudy import ConfigDistance, config_distance, simulation_study

__version__ = "0.1.0"
