"""Labeled feature matrices and the on-disk CSV feature cache.

The cache is plain CSV: optional '#'-prefixed metadata lines, then a header
row of `path,label,<feature names>`, then one row per clip with values
printed at 17 significant digits (lossless for float64).
"""

import csv
import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (rows = clips) with exactly two label classes."""

    features: np.ndarray  # (n_rows, n_features) float64
    labels: np.ndarray  # (n_rows,)
    feature_names: tuple

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise ValueError("features must be a 2-D matrix with >= 1 column")
        if len(self.feature_names) != feats.shape[1]:
            raise ValueError("feature_names must match the column count")
        if len(set(self.feature_names)) != feats.shape[1]:
            raise ValueError("feature names must be unique")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must match the row count")
        if not np.isfinite(feats).all():
            raise ValueError("features must be finite (no missing values)")
        classes, counts = np.unique(labels, return_counts=True)
        if classes.size != 2:
            raise ValueError("expected exactly 2 classes, got %d" % classes.size)
        if counts.min() < 2:
            raise ValueError("each class needs at least 2 rows")

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def classes(self):
        """The two class labels in sorted order; index 0 is 'class 1'."""
        return np.unique(self.labels)

    def class_rows(self):
        """Row-index arrays per class, in class order."""
        return [np.flatnonzero(self.labels == c) for c in self.classes]

    def column(self, name):
        return self.features[:, self.feature_names.index(name)]

    def select_features(self, names):
        """New Dataset restricted to the named columns, in the given order."""
        idx = [self.feature_names.index(n) for n in names]
        return Dataset(self.features[:, idx], self.labels, tuple(names))

    def subset(self, rows):
        """New Dataset restricted to the given row indices."""
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names)

    def replace_features(self, matrix, names):
        """Same rows/labels, different feature matrix (e.g. after PCA)."""
        return Dataset(matrix, self.labels, tuple(names))


def format_value(v: float) -> str:
    """17 significant digits: enough to round-trip any float64 exactly."""
    return "%.17g" % v


def write_feature_cache(fh, paths, labels, matrix, feature_names, meta=None):
    """Write a feature cache to an open text file handle."""
    matrix = np.asarray(matrix, dtype=np.float64)
    for key, value in (meta or {}).items():
        fh.write("# %s: %s\n" % (key, value))
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["path", "label", *feature_names])
    for path, label, row in zip(paths, labels, matrix):
        writer.writerow([path, label, *(format_value(v) for v in row)])


def read_feature_cache(fh):
    """Read a feature cache; returns (dataset, paths, meta)."""
    meta = {}
    lines = []
    for line in fh:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        else:
            lines.append(line)
    reader = csv.reader(io.StringIO("".join(lines)))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty feature cache") from None
    if header[:2] != ["path", "label"]:
        raise ValueError("feature cache must start with path,label columns")
    names = tuple(header[2:])
    paths, labels, rows = [], [], []
    for rec in reader:
        if not rec:
            continue
        paths.append(rec[0])
        labels.append(rec[1])
        rows.append([float(v) for v in rec[2:]])
    if not rows:
        raise ValueError("feature cache holds no rows")
    data = Dataset(np.array(rows), np.array(labels), names)
    return data, paths, meta


def save_feature_cache(path, paths, labels, matrix, feature_names, meta=None):
    with open(path, "w", newline="") as fh:
        write_feature_cache(fh, paths, labels, matrix, feature_names, meta)


def load_feature_cache(path):
    with open(path, "r", newline="") as fh:
        return read_feature_cache(fh)
