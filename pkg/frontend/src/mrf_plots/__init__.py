"""Boxplot rendering for forest benchmark result CSVs."""

from .figures import EmptySelectionError, mse_figure, runtime_figure
from .results import (
    COLUMNS,
    ResultRow,
    ResultsFrame,
    SchemaError,
    check_header,
    load_results,
)

__all__ = [
    "COLUMNS",
    "EmptySelectionError",
    "ResultRow",
    "ResultsFrame",
    "SchemaError",
    "check_header",
    "load_results",
    "mse_figure",
    "runtime_figure",
]
