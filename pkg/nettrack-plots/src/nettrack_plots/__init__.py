"""Figures from nettrack experiment CSVs."""

from .figures import (
    DIAGNOSTICS_COLUMNS,
    RESULTS_COLUMNS,
    OptionError,
    PlotError,
    PlotSpec,
    SchemaError,
    read_entropy,
    read_results,
    render_entropy_plot,
    render_error_plot,
    trailing_mean,
)

__version__ = "0.1.0"

__all__ = [
    "DIAGNOSTICS_COLUMNS",
    "RESULTS_COLUMNS",
    "OptionError",
    "PlotError",
    "PlotSpec",
    "SchemaError",
    "read_entropy",
    "read_results",
    "render_entropy_plot",
    "render_error_plot",
    "trailing_mean",
    "__version__",
]
