"""Datasets: synthetic Gaussian blobs and labelled CSV files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class CSVParseError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError("features must be N x D with one label per row")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, idx) -> Dataset:
        return Dataset(self.features[idx], self.labels[idx])


def class_directions(classes: int, dim: int) -> np.ndarray:
    """Unit axis vectors when there is room, otherwise fixed pseudo-random unit vectors."""
    if classes <= dim:
        return np.eye(dim)[:classes]
    v = np.random.default_rng(12345).standard_normal((classes, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def synth_dataset(classes=4, per_class=50, dim=16, separation=6.0, noise_std=1.0, seed=0) -> Dataset:
    if classes < 2 or per_class < 2:
        raise ValueError("need at least 2 classes with 2 samples each")
    rng = np.random.default_rng(seed)
    centers = separation * class_directions(classes, dim)
    labels = np.repeat(np.arange(classes), per_class)
    x = centers[labels] + noise_std * rng.standard_normal((labels.size, dim))
    perm = rng.permutation(labels.size)
    return Dataset(x[perm], labels[perm])


def load_csv(path) -> Dataset:
    """Read rows of ``label, f1, ..., fD``; a non-numeric first row is a header."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    labels, rows, dim = [], [], None
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if lineno == 1:
                    continue
                raise CSVParseError(f"line {lineno}: non-numeric field in {row!r}") from None
            if len(values) < 2:
                raise CSVParseError(f"line {lineno}: expected a label and at least one feature")
            if dim is None:
                dim = len(values) - 1
            elif len(values) - 1 != dim:
                raise CSVParseError(f"line {lineno}: expected {dim} features, got {len(values) - 1}")
            label = values[0]
            if not math.isfinite(label) or label != int(label) or label < 0:
                raise CSVParseError(f"line {lineno}: label {row[0]!r} is not a nonnegative integer")
            labels.append(int(label))
            rows.append(values[1:])
    if not rows:
        raise CSVParseError(f"{path}: no samples")
    missing = sorted(set(range(max(labels) + 1)) - set(labels))
    if missing:
        raise CSVParseError(f"{path}: labels must be dense 0..C-1, missing {missing}")
    return Dataset(np.asarray(rows), np.asarray(labels))
