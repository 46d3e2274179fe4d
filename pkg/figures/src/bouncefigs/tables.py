"""Readers for the documented diffbounce CSV schemas and metadata document.

These scripts are pure file-to-file transforms: they know the emitted
column sets (documented in the simulator's README) and never import the
simulator itself.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["step", "time", "p1x", "p1y", "v1x", "v1y",
                      "p2x", "p2y", "v2x", "v2y", "events"]
LEARNING_CURVE_COLUMNS = ["iteration", "loss", "grad_max_norm"]
CONTROLS_COLUMNS = ["step", "time", "ux", "uy"]
CONTINUITY_COLUMNS = ["alpha", "step_on", "v2x_on", "v2y_on",
                      "step_off", "v2x_off", "v2y_off"]


class SchemaError(ValueError):
    """An input table does not match its documented schema."""


def read_table(path: str | Path, expected: list[str]) -> dict[str, list]:
    """Load a CSV into columns, validating the header and non-emptiness."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: file is empty")
    header = rows[0]
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        raise SchemaError(
            f"{path}: header mismatch; missing columns {missing or 'none'}, "
            f"unexpected columns {extra or 'none'}"
        )
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: table has no data rows")
    columns: dict[str, list] = {name: [] for name in header}
    for row in body:
        for name, cell in zip(header, row):
            columns[name].append(cell)
    return columns


def floats(column: list[str]) -> np.ndarray:
    return np.asarray([float(c) for c in column])


def read_metadata(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)
