"""Gaussian-process energy prediction for mobile AI application cycles."""

from ._epam import (
    CycleRecord,
    Model,
    NumericalError,
    ValidationError,
    coverage,
    emit_trace,
    evaluate,
    fit,
    format_report,
    ingest,
    load_records,
    log_marginal_likelihood,
    pct_rmse,
    rmse,
    sample_records,
    write_records,
)

__all__ = [
    "CycleRecord",
    "Model",
    "NumericalError",
    "ValidationError",
    "coverage",
    "emit_trace",
    "evaluate",
    "fit",
    "format_report",
    "ingest",
    "load_records",
    "log_marginal_likelihood",
    "pct_rmse",
    "rmse",
    "sample_records",
    "write_records",
]
