"""Render reserve heatmaps and price series from the documented CSV schemas.

The tool talks to the simulator only through its files:

- trajectory CSV: ``step,R_1,...,R_l,p_1,...,p_l,utility,traded``
- heatmap CSV: ``x_bin_lo,x_bin_hi,y_bin_lo,y_bin_hi,count``

Inputs are never modified; outputs are PNG files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """The input file does not match the documented CSV schema."""


@dataclass(frozen=True)
class PlotJob:
    kind: str  # "reserve_heatmap" | "price_series"
    input_path: str
    output_path: str

    def __post_init__(self):
        if self.kind not in ("reserve_heatmap", "price_series"):
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def _read_rows(path: str) -> tuple[list[str], list[list[str]]]:
    file_path = Path(path)
    if not file_path.is_file():
        raise SchemaError(f"input file not found: {path}")
    with open(file_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        rows = [row for row in reader if row]
    return header, rows


def load_heatmap(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid counts plus bin edges from a heatmap CSV."""
    header, rows = _read_rows(path)
    expected = ["x_bin_lo", "x_bin_hi", "y_bin_lo", "y_bin_hi", "count"]
    if header != expected:
        raise SchemaError(f"{path}: header {header} does not match {expected}")
    if not rows:
        raise SchemaError(f"{path}: no grid cells")
    try:
        table = np.asarray([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric cell: {exc}") from exc
    if table.shape[1] != 5:
        raise SchemaError(f"{path}: rows must have 5 columns")
    if np.any(table[:, 4] < 0):
        raise SchemaError(f"{path}: negative counts")
    if table[:, 4].sum() == 0:
        raise SchemaError(f"{path}: grid is empty (all counts zero)")

    x_edges = np.unique(np.concatenate([table[:, 0], table[:, 1]]))
    y_edges = np.unique(np.concatenate([table[:, 2], table[:, 3]]))
    counts = np.zeros((len(x_edges) - 1, len(y_edges) - 1))
    x_index = {v: i for i, v in enumerate(x_edges[:-1])}
    y_index = {v: i for i, v in enumerate(y_edges[:-1])}
    for x_lo, _, y_lo, _, count in table:
        counts[x_index[x_lo], y_index[y_lo]] += count
    return counts, x_edges, y_edges


def load_price_series(path: str) -> tuple[np.ndarray, np.ndarray]:
    """(steps, first-good price) columns from a trajectory CSV."""
    header, rows = _read_rows(path)
    if not header or header[0] != "step":
        raise SchemaError(f"{path}: first column must be `step`, got {header[:1]}")
    if "p_1" not in header:
        raise SchemaError(f"{path}: missing price column p_1 (header {header})")
    if not rows:
        raise SchemaError(f"{path}: no recorded steps")
    price_col = header.index("p_1")
    try:
        steps = np.asarray([float(row[0]) for row in rows])
        prices = np.asarray([float(row[price_col]) for row in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: bad row: {exc}") from exc
    if np.any(np.isnan(prices)):
        raise SchemaError(f"{path}: price column contains NaN")
    return steps, prices


def render_heatmap(job: PlotJob) -> Path:
    """Occupancy image of visited reserve points."""
    counts, x_edges, y_edges = load_heatmap(job.input_path)
    fig, ax = plt.subplots(figsize=(6.4, 5.6))
    mesh = ax.pcolormesh(x_edges, y_edges, counts.T, cmap="inferno", shading="flat")
    fig.colorbar(mesh, ax=ax, label="visits")
    ax.set_xlabel("reserve of good 1")
    ax.set_ylabel("reserve of good 2")
    ax.set_title("Reserve occupancy")
    out = Path(job.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out


def render_price_series(job: PlotJob) -> Path:
    """First-good spot price per step with its running average."""
    steps, prices = load_price_series(job.input_path)
    running = np.cumsum(prices) / np.arange(1, len(prices) + 1)
    fig, ax = plt.subplots(figsize=(7.2, 4.8))
    ax.plot(steps, prices, lw=0.5, alpha=0.6, color="#1f77b4", label="spot price")
    ax.plot(steps, running, lw=1.8, color="#d62728", label="running average")
    ax.axhline(0.5, color="0.3", lw=1.0, ls="--", label="1/2")
    ax.set_xlabel("step")
    ax.set_ylabel("price of good 1")
    ax.set_title("Spot price and running average")
    ax.legend(loc="best")
    out = Path(job.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out
