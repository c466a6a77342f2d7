"""Load harness CSVs and render convergence curves.

The input schema is fixed (column set and order); anything else is a hard
error so a stale or truncated log never produces a silently wrong figure.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

# must match the harness writer bit-for-bit
SCHEMA = ("t", "rounds", "upcom", "downcom", "totalcom", "gap", "psi",
          "ergodic_metric")
X_CHOICES = ("totalcom", "upcom", "t")
Y_CHOICES = ("gap", "psi", "ergodic_metric")

AXIS_LABELS = {
    "totalcom": "TotalCom (reals sent)",
    "upcom": "UpCom (reals sent)",
    "t": "iteration",
    "gap": "f(x) - f*",
    "psi": "Lyapunov value",
    "ergodic_metric": "mean squared gradient norm",
}

CLIP_NOTE = "nonpositive values clipped to machine epsilon for log scale"


class SchemaError(ValueError):
    """A CSV does not conform to the harness schema."""


@dataclass
class PlotSpec:
    """One figure: labeled input CSVs plus axis and output choices."""

    inputs: list[tuple[str, str]]  # (label, csv path)
    x: str = "totalcom"
    y: str = "gap"
    out: str = "figure.png"
    title: Optional[str] = None

    def __post_init__(self):
        if not self.inputs:
            raise ValueError("need at least one labeled input CSV")
        if self.x not in X_CHOICES:
            raise ValueError(f"x must be one of {X_CHOICES}, got {self.x!r}")
        if self.y not in Y_CHOICES:
            raise ValueError(f"y must be one of {Y_CHOICES}, got {self.y!r}")


def _check_header(fieldnames, path: str) -> None:
    got = tuple(fieldnames or ())
    if got == SCHEMA:
        return
    for want, have in zip(SCHEMA, got):
        if want != have:
            raise SchemaError(
                f"{path}: expected column {want!r}, found {have!r}"
            )
    if len(got) < len(SCHEMA):
        raise SchemaError(f"{path}: missing column {SCHEMA[len(got)]!r}")
    raise SchemaError(f"{path}: unexpected column {got[len(SCHEMA)]!r}")


def load_curve(path: str, x: str, y: str) -> tuple[np.ndarray, np.ndarray]:
    """Read one CSV and return the (x, y) columns as float arrays.

    Rows where the y cell is empty (a metric not tracked by that run) are
    skipped; a file with a valid header but no usable rows is an error.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, path)
        xs, ys = [], []
        for row in reader:
            if row[y] == "" or row[y] is None:
                continue
            xs.append(float(row[x]))
            ys.append(float(row[y]))
    if not xs:
        raise SchemaError(f"{path}: no rows with a {y!r} value")
    return np.asarray(xs), np.asarray(ys)


def build_figure(spec: PlotSpec):
    """Assemble the matplotlib figure without writing it to disk."""
    curves = [(label, *load_curve(path, spec.x, spec.y))
              for label, path in spec.inputs]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    clipped = False
    eps = sys.float_info.epsilon
    for label, xs, ys in curves:
        if (ys <= 0).any():
            clipped = True
            ys = np.maximum(ys, eps)
        ax.semilogy(xs, ys, label=label)
    ax.set_xlabel(AXIS_LABELS[spec.x])
    ax.set_ylabel(AXIS_LABELS[spec.y])
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    if clipped:
        fig.text(0.01, 0.01, CLIP_NOTE, fontsize=7, alpha=0.7)
    return fig


def render(spec: PlotSpec) -> str:
    """Validate inputs, draw the figure, write it, return the output path.

    All CSVs are parsed before the figure is created, so a bad input never
    leaves a partial image behind.
    """
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out, dpi=150, bbox_inches="tight")
    finally:
        plt.close(fig)
    return spec.out
