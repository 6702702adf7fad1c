"""Labeled feature data: CSV ingestion, standardization, folds, synthetic data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    ClassTooSmall,
    EmptyFile,
    InputError,
    InvalidDimensions,
    MissingLabelColumn,
    NonNumericFeature,
    RaggedRows,
)


class Sample(NamedTuple):
    features: np.ndarray
    label: str
    index: int


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable labeled corpus.

    ``X`` is the ``(n, d)`` feature matrix, ``labels`` a length-``n`` array of
    string labels. ``class_table`` maps each label (in sorted order) to the
    ascending indices of its members.
    """

    X: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()
    class_table: dict = field(init=False, repr=False)

    def __post_init__(self):
        X = _frozen(self.X)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidDimensions(f"feature matrix must be (n>=1, d>=1), got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InputError("features contain NaN or Inf")
        labels = np.array([str(v) for v in self.labels], dtype=object)
        if labels.shape != (X.shape[0],):
            raise InvalidDimensions(f"{labels.shape[0]} labels for {X.shape[0]} samples")
        labels.setflags(write=False)
        names = tuple(self.feature_names) or tuple(f"f{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidDimensions(f"{len(names)} feature names for d={X.shape[1]}")
        table = {}
        for lab in sorted(set(labels)):
            idx = np.flatnonzero(labels == lab)
            idx.setflags(write=False)
            table[lab] = idx
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "class_table", table)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> list:
        return list(self.class_table)

    def __len__(self):
        return self.n

    def __getitem__(self, i) -> Sample:
        return Sample(self.X[i], self.labels[i], int(i))

    def __iter__(self) -> Iterator[Sample]:
        return (self[i] for i in range(self.n))

    @property
    def samples(self) -> list:
        return list(self)

    def subset(self, indices) -> "Dataset":
        """New dataset holding the rows at ``indices`` (re-indexed from 0)."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.X[idx], self.labels[idx], self.feature_names)


def _read_rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise EmptyFile(f"{path}: no header row")
    if len(rows) == 1:
        raise EmptyFile(f"{path}: no data rows")
    return [h.strip() for h in rows[0]], rows[1:]


def _parse_features(header, body, feat_cols):
    X = np.empty((len(body), len(feat_cols)))
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise RaggedRows(r, len(header), len(row))
        for c, j in enumerate(feat_cols):
            try:
                v = float(row[j])
            except ValueError:
                raise NonNumericFeature(r, header[j], row[j]) from None
            if not math.isfinite(v):
                raise NonNumericFeature(r, header[j], row[j])
            X[r - 1, c] = v
    return X


def load_csv(path, label_column=0) -> Dataset:
    """Read a header-first CSV with one label column and numeric features.

    ``label_column`` is a header name, or a 0-based column index (as an int,
    or a digit string that doesn't match any header name). Labels are kept as
    strings. Data rows are numbered from 1 in error messages.
    """
    header, body = _read_rows(path)
    col = _resolve_column(header, label_column)
    feat_cols = [j for j in range(len(header)) if j != col]
    if not feat_cols:
        raise InvalidDimensions(f"{path}: no feature columns besides the label")
    X = _parse_features(header, body, feat_cols)
    labels = [row[col].strip() for row in body]
    return Dataset(X, labels, tuple(header[j] for j in feat_cols))


def load_features(path, label_column=None) -> np.ndarray:
    """Feature matrix of an unlabeled CSV.

    A column named ``label_column`` is dropped if the header has one;
    otherwise every column is a feature.
    """
    header, body = _read_rows(path)
    feat_cols = [j for j, h in enumerate(header) if h != label_column]
    if not feat_cols:
        raise InvalidDimensions(f"{path}: no feature columns")
    return _parse_features(header, body, feat_cols)


def _resolve_column(header, label_column):
    if isinstance(label_column, str):
        if label_column in header:
            return header.index(label_column)
        if not label_column.lstrip("-").isdigit():
            raise MissingLabelColumn(f"no column named {label_column!r}")
        label_column = int(label_column)
    if not 0 <= label_column < len(header):
        raise MissingLabelColumn(f"label column index {label_column} out of range for {len(header)} columns")
    return label_column


def write_csv(ds: Dataset, path, label_name="label"):
    """Write ``ds`` in the ingestion format, label first, floats at full precision."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label_name, *ds.feature_names])
        for x, lab in zip(ds.X, ds.labels):
            w.writerow([lab, *(repr(float(v)) for v in x)])


@dataclass(frozen=True)
class ScalingParams:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - self.mean) / self.scale

    def apply(self, ds: Dataset) -> Dataset:
        return Dataset(self.transform(ds.X), ds.labels, ds.feature_names)

    def to_dict(self):
        return {"mean": [float(v) for v in self.mean], "scale": [float(v) for v in self.scale]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


def standardize(ds: Dataset):
    """Z-score every column (population stddev); constant columns keep scale 1."""
    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    # subnormal spreads would overflow the division
    std[(np.ptp(ds.X, axis=0) == 0) | (std < np.finfo(float).tiny)] = 1.0
    params = ScalingParams(_frozen(mean), _frozen(std))
    return params.apply(ds), params


def stratified_kfold(ds: Dataset, folds: int, seed: int) -> list:
    """Split indices into ``folds`` stratified (train, test) index arrays.

    Each class's members are shuffled and dealt round-robin onto the folds.
    The dealer position carries over from one class to the next so the fold
    sizes stay balanced overall, not just per class.
    """
    if folds < 2:
        raise InputError(f"folds must be >= 2, got {folds}")
    for lab, idx in ds.class_table.items():
        if len(idx) < folds:
            raise ClassTooSmall(lab, len(idx), folds)
    rng = np.random.default_rng(seed)
    assign = np.empty(ds.n, dtype=int)
    pos = 0
    for lab, idx in ds.class_table.items():
        members = rng.permutation(idx)
        assign[members] = (pos + np.arange(len(members))) % folds
        pos = (pos + len(members)) % folds
    everything = np.arange(ds.n)
    return [(everything[assign != f], everything[assign == f]) for f in range(folds)]


def generate_synthetic(
    classes: int,
    per_class: int,
    dim: int,
    informative_dim: int,
    separation: float,
    noise_scale: float,
    seed: int,
) -> Dataset:
    """Gaussian clusters whose means differ only in the leading coordinates.

    Class means are ``separation * N(0, I)`` on the first ``informative_dim``
    coordinates and 0 elsewhere; every sample adds isotropic Gaussian noise
    with standard deviation ``noise_scale`` on all ``dim`` coordinates.
    Labels are ``c0``, ``c1``, ... zero-padded so string order is class order.
    """
    if classes < 1 or per_class < 1 or dim < 1:
        raise InvalidDimensions("classes, per_class and dim must all be >= 1")
    if not 0 <= informative_dim <= dim:
        raise InvalidDimensions(f"informative_dim={informative_dim} must lie in [0, dim={dim}]")
    if not separation >= 0:
        raise InvalidDimensions(f"separation must be >= 0, got {separation}")
    if not noise_scale > 0:
        raise InvalidDimensions(f"noise_scale must be > 0, got {noise_scale}")

    rng = np.random.default_rng(seed)
    means = np.zeros((classes, dim))
    means[:, :informative_dim] = separation * rng.standard_normal((classes, informative_dim))
    noise = noise_scale * rng.standard_normal((classes * per_class, dim))
    X = np.repeat(means, per_class, axis=0) + noise
    width = len(str(classes - 1))
    labels = [f"c{c:0{width}d}" for c in range(classes) for _ in range(per_class)]
    return Dataset(X, labels)


def from_arrays(X: Sequence, labels: Sequence) -> Dataset:
    return Dataset(np.asarray(X, dtype=float).reshape(len(labels), -1), labels)
