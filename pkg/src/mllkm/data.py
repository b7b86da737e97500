"""Dataset loading, standardization, splitting and synthetic generation."""

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    """Dense feature matrix with binary labels canonicalized to {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError(f"need at least one sample and one dimension, got shape {(n, d)}")
        if self.labels.shape != (n,):
            raise ValueError(f"labels shape {self.labels.shape} does not match {n} samples")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]


@dataclass
class ScalerParams:
    """Per-dimension centering and scale. Scale entries are strictly positive."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.ndim != 1 or self.mean.shape != self.std.shape:
            raise ValueError("mean and std must be 1-d vectors of equal length")
        if np.any(self.std <= 0):
            raise ValueError("std entries must be positive")

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse(self, X):
        return np.asarray(X, dtype=np.float64) * self.std + self.mean

    @classmethod
    def identity(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))


def _canonical_labels(raw, context=""):
    """Map two distinct raw label values onto {-1, +1}; smaller raw value -> -1."""
    raw = np.asarray(raw, dtype=np.float64)
    values = np.unique(raw)
    if values.size > 2:
        raise ValueError(
            f"{context}expected at most two distinct labels, found {values.size}"
        )
    if values.size == 2:
        return np.where(raw == values[0], -1.0, 1.0)
    if values[0] in (-1.0, 1.0):
        return raw.copy()
    raise ValueError(
        f"{context}single label value {values[0]} cannot be mapped onto -1/+1"
    )


def load_libsvm(path):
    """Parse `<label> <index>:<value> ...` lines with 1-based increasing indices.

    Missing indices are zero-filled; the dimension is the largest index seen.
    """
    rows = []
    labels = []
    dim = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            entries = []
            prev = 0
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: malformed entry {tok!r}") from None
                if idx <= prev:
                    raise ValueError(
                        f"{path}:{lineno}: indices must be 1-based and strictly increasing"
                    )
                prev = idx
                entries.append((idx, val))
            dim = max(dim, prev)
            rows.append(entries)
    if not rows:
        raise ValueError(f"{path}: empty file")
    X = np.zeros((len(rows), dim))
    for i, entries in enumerate(rows):
        for idx, val in entries:
            X[i, idx - 1] = val
    return Dataset(X, _canonical_labels(labels, context=f"{path}: "))


def save_libsvm(data, path):
    """Write a Dataset as dense LIBSVM text (labels serialized as +1/-1)."""
    with open(path, "w") as fh:
        for x, y in zip(data.features, data.labels):
            cells = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(x))
            fh.write(f"{int(y):+d} {cells}\n")


def _read_csv(path, label_column):
    rows = []
    labels = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
                if label_column is not None:
                    col = label_column if label_column >= 0 else width + label_column
                    if not 0 <= col < width:
                        raise ValueError(
                            f"{path}: label column {label_column} out of range for {width} columns"
                        )
            elif len(row) != width:
                raise ValueError(
                    f"{path}:{lineno}: ragged row ({len(row)} cells, expected {width})"
                )
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
            if label_column is None:
                rows.append(values)
            else:
                labels.append(values[col])
                rows.append(values[:col] + values[col + 1 :])
    if not rows:
        raise ValueError(f"{path}: empty file")
    return np.array(rows, dtype=np.float64), (labels if label_column is not None else None)


def load_csv(path, label_column):
    """Rectangular numeric CSV with one column holding the two class labels."""
    X, labels = _read_csv(path, label_column)
    return Dataset(X, _canonical_labels(labels, context=f"{path}: "))


def load_matrix_csv(path):
    """Rectangular numeric CSV without labels (prediction-time input)."""
    return _read_csv(path, None)[0]


def standardize(train):
    """Center each dimension and scale by its population standard deviation.

    Zero-variance dimensions are centered only (scale left at 1).
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std <= 0.0, 1.0, std)
    scaler = ScalerParams(mean, std)
    return Dataset(scaler.transform(train.features), train.labels.copy()), scaler


def split(data, train_fraction, seed):
    """Deterministic shuffle split; train part has round(train_fraction * n) samples."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = data.n
    n_train = int(math.floor(train_fraction * n + 0.5))
    if n_train < 1 or n - n_train < 1:
        raise ValueError(f"train_fraction={train_fraction} leaves an empty part for n={n}")
    order = np.random.default_rng(seed).permutation(n)
    tr = np.sort(order[:n_train])
    te = np.sort(order[n_train:])
    return (
        Dataset(data.features[tr], data.labels[tr]),
        Dataset(data.features[te], data.labels[te]),
    )


def piecewise_boundary(num_segments, seed, attempt=0):
    """Knot heights of a random piecewise-linear boundary spanning x in [0, 1]."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1, attempt)))
    xs = np.linspace(0.0, 1.0, num_segments + 1)
    ys = rng.uniform(0.2, 0.8, size=num_segments + 1)
    return xs, ys


def gen_piecewise_detailed(n, num_segments, seed):
    """Like gen_piecewise but also returns the boundary knots (xs, ys)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if num_segments < 1:
        raise ValueError("need num_segments >= 1")
    points_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    X = points_rng.uniform(0.0, 1.0, size=(n, 2))
    for attempt in range(10000):
        xs, ys = piecewise_boundary(num_segments, seed, attempt)
        labels = np.where(X[:, 1] - np.interp(X[:, 0], xs, ys) >= 0.0, 1.0, -1.0)
        if labels.min() < labels.max():
            return Dataset(X, labels), (xs, ys)
    raise RuntimeError("could not draw a boundary with both classes non-empty")


def gen_piecewise(n, num_segments, seed):
    """Uniform points on the unit square labeled by the side of a random
    continuous piecewise-linear boundary; the boundary is redrawn (seed-derived)
    until both classes are non-empty."""
    return gen_piecewise_detailed(n, num_segments, seed)[0]
