"""Render figures from experiment CSVs.

Works purely off the documented file schemas: the results CSV
(``t,method,L_t``) for tracking-error curves and the diagnostics CSV
(``t,node,entropy,log_evidence,degenerate``) for entropy-vs-time.
Series are plotted exactly as stored; smoothing only happens behind an
explicit, legend-labeled flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from matplotlib.figure import Figure

RESULTS_COLUMNS = ("t", "method", "L_t")
DIAGNOSTICS_COLUMNS = ("t", "node", "entropy", "log_evidence", "degenerate")

MARKER_STYLE = {"color": "0.55", "linestyle": "--", "linewidth": 0.8}


class PlotError(Exception):
    """Base for everything this package raises on purpose."""


class SchemaError(PlotError):
    """Input file does not match the documented CSV schema."""


class OptionError(PlotError):
    """A requested option does not fit the data."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure request.

    ``methods`` limits the error plot to a subset of the labels present
    in the CSV; None plots them all.  ``rolling_mean`` replaces each
    series by its trailing mean of that width, labeled as such.
    """

    input_csv: str
    output_image: str
    methods: Optional[tuple[str, ...]] = None
    log_scale: bool = False
    change_markers: tuple[int, ...] = ()
    rolling_mean: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "change_markers", tuple(self.change_markers))
        if self.methods is not None:
            object.__setattr__(self, "methods", tuple(self.methods))
        if self.rolling_mean is not None and self.rolling_mean < 1:
            raise OptionError(f"rolling mean width must be >= 1, got {self.rolling_mean}")


def _check_header(line: str, expected, path) -> None:
    got = line.strip().split(",")
    for name in expected:
        if name not in got:
            raise SchemaError(f"missing column '{name}' in {path} (header: {line.strip()!r})")
    if got != list(expected):
        raise SchemaError(f"bad header in {path}: expected {','.join(expected)!r}, got {line.strip()!r}")


def _data_lines(path, expected):
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise SchemaError(f"{path} is empty")
    _check_header(lines[0], expected, path)
    rows = [(no, raw) for no, raw in enumerate(lines[1:], start=2) if raw.strip()]
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    return rows


def read_results(path) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Group the results CSV by method: label -> (t array, L_t array)."""
    ts: dict[str, list] = {}
    values: dict[str, list] = {}
    for no, raw in _data_lines(path, RESULTS_COLUMNS):
        parts = raw.split(",")
        if len(parts) != 3:
            raise SchemaError(f"expected 3 fields, got {len(parts)} [{path}:{no}]")
        try:
            t = int(parts[0])
            value = float(parts[2])
        except ValueError as exc:
            raise SchemaError(f"{exc} [{path}:{no}]") from None
        ts.setdefault(parts[1], []).append(t)
        values.setdefault(parts[1], []).append(value)
    return {label: (np.array(ts[label]), np.array(values[label])) for label in ts}


def read_entropy(path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Group the diagnostics CSV by node: node -> (t array, entropy array)."""
    ts: dict[int, list] = {}
    values: dict[int, list] = {}
    for no, raw in _data_lines(path, DIAGNOSTICS_COLUMNS):
        parts = raw.split(",")
        if len(parts) != 5:
            raise SchemaError(f"expected 5 fields, got {len(parts)} [{path}:{no}]")
        try:
            t = int(parts[0])
            node = int(parts[1])
            value = float(parts[2])
        except ValueError as exc:
            raise SchemaError(f"{exc} [{path}:{no}]") from None
        ts.setdefault(node, []).append(t)
        values.setdefault(node, []).append(value)
    return {node: (np.array(ts[node]), np.array(values[node])) for node in ts}


def trailing_mean(values: np.ndarray, width: int) -> np.ndarray:
    """Mean of the last ``width`` entries at each position (shorter at the start)."""
    sums = np.cumsum(values)
    out = np.empty_like(sums)
    out[:width] = sums[:width] / np.arange(1, min(width, len(values)) + 1)
    if len(values) > width:
        out[width:] = (sums[width:] - sums[:-width]) / width
    return out


def _finish(fig: Figure, ax, spec: PlotSpec, ylabel: str) -> Figure:
    for t in spec.change_markers:
        ax.axvline(t, **MARKER_STYLE)
    if spec.log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=150)
    return fig


def render_error_plot(spec: PlotSpec) -> Figure:
    """One tracking-error curve per method; returns the figure it wrote."""
    series = read_results(spec.input_csv)
    labels = sorted(series)
    if spec.methods is not None:
        unknown = sorted(set(spec.methods) - set(labels))
        if unknown:
            raise OptionError(
                f"unknown methods: {', '.join(unknown)} (CSV has: {', '.join(labels)})"
            )
        labels = [label for label in labels if label in spec.methods]

    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.add_subplot()
    for label in labels:
        ts, values = series[label]
        text = label
        if spec.rolling_mean is not None:
            values = trailing_mean(values, spec.rolling_mean)
            text = f"{label} (rolling mean, w={spec.rolling_mean})"
        ax.plot(ts, values, linewidth=1.0, label=text)
    return _finish(fig, ax, spec, "L_t")


def render_entropy_plot(spec: PlotSpec) -> Figure:
    """One entropy curve per node from the diagnostics CSV."""
    series = read_entropy(spec.input_csv)
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.add_subplot()
    for node in sorted(series):
        ts, values = series[node]
        text = f"node {node}"
        if spec.rolling_mean is not None:
            values = trailing_mean(values, spec.rolling_mean)
            text = f"{text} (rolling mean, w={spec.rolling_mean})"
        ax.plot(ts, values, linewidth=1.0, label=text)
    return _finish(fig, ax, spec, "entropy (nats)")
