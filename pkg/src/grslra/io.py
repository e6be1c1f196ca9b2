"""CSV series and matrix files, normalization and forecast metrics.

Series files hold one value per row, optionally with a header row and extra
columns (carried along as labels). Floats are written with ``repr`` so they
round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or unusable input data."""


@dataclass
class SeriesFile:
    values: np.ndarray
    labels: list[str] | None = None
    column: str | None = None
    extra: dict = field(default_factory=dict)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path) -> list[list[str]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]


def load_series_csv(path, column: str | int | None = None) -> SeriesFile:
    """Read one column of a CSV file as a float series.

    ``column`` is a header name or a 0-based index; by default the last column
    is used. A first row whose selected cell is not numeric is taken as the
    header. When another column exists, its first entry per row is kept as a
    label.
    """
    rows = _read_rows(path)
    if not rows:
        raise DataError(f"{path}: empty file")
    header = None
    ncol = len(rows[0])
    if isinstance(column, str) and not column.lstrip("-").isdigit():
        header = [c.strip() for c in rows[0]]
        if column not in header:
            raise DataError(f"{path}: no column named {column!r} (header: {header})")
        col = header.index(column)
        rows = rows[1:]
    else:
        col = ncol - 1 if column is None else int(column)
        if not -ncol <= col < ncol:
            raise DataError(f"{path}: column index {col} out of range for {ncol} columns")
        if not _is_number(rows[0][col].strip()):
            header = [c.strip() for c in rows[0]]
            rows = rows[1:]
    first_data_row = 2 if header else 1
    values = []
    labels = []
    label_col = 0 if (col % ncol) != 0 and ncol > 1 else None
    for i, row in enumerate(rows):
        lineno = i + first_data_row
        try:
            cell = row[col].strip()
        except IndexError:
            raise DataError(f"{path}: row {lineno} has no column {col}") from None
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}: row {lineno}: non-numeric value {cell!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}: row {lineno}: non-finite value {cell!r}")
        values.append(v)
        if label_col is not None:
            labels.append(row[label_col].strip())
    if not values:
        raise DataError(f"{path}: column has no values")
    name = header[col] if header else None
    return SeriesFile(np.array(values), labels or None, name)


def write_series_csv(path, values, header: str | None = None, labels=None, label_header: str = "label") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if labels is not None:
            if header:
                w.writerow([label_header, header])
            w.writerows([lab, repr(float(v))] for lab, v in zip(labels, values))
        else:
            if header:
                w.writerow([header])
            w.writerows([repr(float(v))] for v in values)


def load_matrix_csv(path) -> np.ndarray:
    rows = _read_rows(path)
    if rows and not all(_is_number(c.strip()) for c in rows[0]):
        rows = rows[1:]
    try:
        X = np.array([[float(c) for c in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if X.ndim != 2 or X.size == 0:
        raise DataError(f"{path}: expected a non-empty rectangular matrix")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: matrix contains non-finite values")
    return X


def write_matrix_csv(path, X) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows([repr(float(v)) for v in row] for row in np.asarray(X))


def write_table_csv(path, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("", encoding="utf-8")
        return
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def normalize_unit(d) -> tuple[np.ndarray, float, float]:
    """Map ``d`` affinely onto [0, 1]; returns ``(scaled, min, max)``."""
    d = np.asarray(d, dtype=float)
    lo, hi = float(d.min()), float(d.max())
    if not hi > lo:
        raise DataError("cannot normalize a constant series")
    return (d - lo) / (hi - lo), lo, hi


def denormalize(d, lo: float, hi: float) -> np.ndarray:
    return np.asarray(d, dtype=float) * (hi - lo) + lo


def mean_abs_deviation(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.size < 1:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean(np.abs(pred - truth)))
