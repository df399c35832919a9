"""CSV ingestion, mask sidecars and min-max normalization.

CSV convention: header row, comma separated, ``?`` or an empty cell marks a
missing value.  Missing values are ``NaN`` in memory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateColumnError, ParseError, ShapeError

MISSING_MARKERS = ("?", "")
MISSING_OUT = "?"


@dataclass
class Dataset:
    feature_names: list
    values: np.ndarray  # (n_records, n_features), NaN = missing

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def n_records(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def complete_rows(self) -> np.ndarray:
        return np.flatnonzero(~self.mask.any(axis=1))


@dataclass
class NormStats:
    minimum: np.ndarray
    maximum: np.ndarray

    @classmethod
    def fit(cls, values) -> "NormStats":
        values = np.asarray(values, dtype=float)
        observed = ~np.isnan(values)
        empty = np.flatnonzero(~observed.any(axis=0))
        if empty.size:
            raise DegenerateColumnError(f"columns {empty.tolist()} have no observed values")
        return cls(np.nanmin(values, axis=0), np.nanmax(values, axis=0))

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum

    def normalize(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        span = self.span
        constant = span == 0
        out = (values - self.minimum) / np.where(constant, 1.0, span)
        out = np.where(constant & ~np.isnan(values), 0.5, out)
        return out

    def denormalize(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        out = values * self.span + self.minimum
        return np.where(self.span == 0, self.minimum, out)

    def to_dict(self) -> dict:
        return {"min": [float(v) for v in self.minimum], "max": [float(v) for v in self.maximum]}

    @classmethod
    def from_dict(cls, doc: dict) -> "NormStats":
        return cls(np.array(doc["min"], dtype=float), np.array(doc["max"], dtype=float))


def _parse_cell(text, path, row, col):
    text = text.strip()
    if text in MISSING_MARKERS:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric cell {text!r}", path, row, col) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {text!r}", path, row, col)
    return value


def load_csv(path) -> Dataset:
    """Read a CSV into a :class:`Dataset`.

    Row numbers in errors are 1-based file lines; columns are 1-based.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise ParseError("file not found", path) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}", path) from None
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError("empty file, expected a header row", path, 1)
    header = [name.strip() for name in rows[0]]
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", path, lineno)
        values.append([_parse_cell(cell, path, lineno, c) for c, cell in enumerate(row, start=1)])
    arr = np.array(values, dtype=float).reshape(len(values), len(header))
    return Dataset(header, arr)


def format_value(value: float) -> str:
    if math.isnan(value):
        return MISSING_OUT
    return repr(float(value))


def save_csv(dataset: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset.feature_names)
        for row in dataset.values:
            writer.writerow([format_value(v) for v in row])


def save_mask(feature_names, mask, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(feature_names)
        for row in mask:
            writer.writerow([int(v) for v in row])


def load_mask(path, n_features=None) -> np.ndarray:
    ds = load_csv(path)
    values = ds.values
    if np.any(np.isnan(values)) or not np.all(np.isin(values, (0.0, 1.0))):
        raise ParseError("mask sidecar cells must be 0 or 1", path)
    if n_features is not None and ds.n_features != n_features:
        raise ShapeError(f"mask has {ds.n_features} columns, expected {n_features}")
    return values.astype(bool)
