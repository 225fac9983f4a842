"""Per-channel summary statistics and feature standardisation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .data_model import CHANNEL_NAMES, MovementClass
from .errors import DataError, ShapeMismatch

STATS = ("mean", "min", "max", "std")


def feature_names(channels: Sequence[str] = CHANNEL_NAMES) -> list[str]:
    return [f"{c}_{s}" for c in channels for s in STATS]


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: MovementClass | None = None

    def __len__(self) -> int:
        return len(self.values)


def feature_matrix(windows: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Rows of ``(mean, min, max, std)`` per channel for each window.

    Windows may differ in length but must share the channel count.
    """
    rows = []
    for w in windows:
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1:
            raise DataError("feature window must be a non-empty (len, channels) matrix")
        mean = w.mean(axis=0)
        lo = w.min(axis=0)
        hi = w.max(axis=0)
        std = np.sqrt(np.mean((w - mean) ** 2, axis=0))
        flat = lo == hi
        mean = np.where(flat, lo, np.clip(mean, lo, hi))
        std = np.where(flat, 0.0, std)
        rows.append(np.stack([mean, lo, hi, std], axis=1).ravel())
    if not rows:
        return np.zeros((0, 0))
    if len({len(r) for r in rows}) != 1:
        raise ShapeMismatch("windows differ in channel count")
    return np.vstack(rows)


def extract_features(window: np.ndarray, label: MovementClass | None = None) -> FeatureVector:
    """Mean, minimum, maximum and population standard deviation of every channel."""
    return FeatureVector(feature_matrix([window])[0], label)


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-dimension standardisation learnt from training vectors.

    Zero-variance dimensions keep ``std = 1`` internally, are listed in
    ``constant`` and always map to 0.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray = field(default=None)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        const = (
            std <= 0 if self.constant is None else np.asarray(self.constant, dtype=bool)
        )
        std = np.where(const, 1.0, std)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ShapeMismatch("scaler mean/std shapes differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "constant", const)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "Scaler":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise ShapeMismatch(f"expected {self.dim} dimensions, got {X.shape[-1]}")
        return np.where(self.constant, 0.0, (X - self.mean) / self.std)


def fit_scaler(train: Sequence[FeatureVector] | np.ndarray) -> Scaler:
    X = _as_matrix(train)
    if X.shape[0] < 2:
        raise DataError("fit_scaler needs at least 2 vectors")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.maximum(1.0, np.abs(mean))
    return Scaler(mean, std, constant=std <= 1e-12 * scale)


def apply_scaler(scaler: Scaler, v: FeatureVector) -> FeatureVector:
    return FeatureVector(scaler.transform(v.values), v.label)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return np.atleast_2d(vectors).astype(np.float64)
    if not vectors:
        return np.zeros((0, 0))
    return np.vstack([v.values for v in vectors])


# ---------------------------------------------------------------------------
# CSV


def write_scaler(scaler: Scaler, stream: IO[str]) -> None:
    stream.write("dim,mean,std\n")
    for i, (m, s, c) in enumerate(zip(scaler.mean, scaler.std, scaler.constant)):
        stream.write(f"{i},{float(m)!r},{0.0 if c else float(s)!r}\n")


def read_scaler(stream: IO[str] | str) -> Scaler:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = [r for r in csv.reader(stream) if r]
    if not rows or rows[0] != ["dim", "mean", "std"]:
        raise DataError("scaler CSV must start with header dim,mean,std")
    body = rows[1:]
    if [int(r[0]) for r in body] != list(range(len(body))):
        raise DataError("scaler dimensions must be listed in order")
    return Scaler(np.array([float(r[1]) for r in body]), np.array([float(r[2]) for r in body]))


def write_feature_table(
    X: np.ndarray,
    labels: Sequence[MovementClass | None],
    stream: IO[str],
    names: Sequence[str] | None = None,
    sources: Sequence[str] | None = None,
) -> None:
    names = list(names) if names is not None else feature_names()
    if X.shape[1] != len(names):
        raise ShapeMismatch("feature names do not match matrix width")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(names + ["label", "source"])
    for i, row in enumerate(X):
        lab = labels[i]
        w.writerow([repr(float(v)) for v in row]
                   + [lab.value if lab else "", sources[i] if sources else ""])


def read_feature_table(stream: IO[str] | str):
    """Inverse of :func:`write_feature_table`: ``(X, labels, names, sources)``."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = [r for r in csv.reader(stream) if r]
    header = rows[0]
    if header[-2:] != ["label", "source"]:
        raise DataError("feature CSV must end with label,source columns")
    d = len(header) - 2
    X = np.array([[float(v) for v in r[:d]] for r in rows[1:]]).reshape(-1, d)
    labels = [MovementClass.parse(r[d]) if r[d] else None for r in rows[1:]]
    return X, labels, header[:d], [r[d + 1] for r in rows[1:]]
