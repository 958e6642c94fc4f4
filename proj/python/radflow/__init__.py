"""Networked time series forecasting with a recurrent core and flow aggregation."""

from ._core import (
    ConfigError,
    DataError,
    Dataset,
    FormatError,
    Model,
    compute_metrics,
    evaluate,
    fit,
    forecast,
    paired_ttest,
    synthesize,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "FormatError",
    "Model",
    "compute_metrics",
    "evaluate",
    "fit",
    "forecast",
    "paired_ttest",
    "synthesize",
]
