"""Multiclass linear soft-margin SVM (one-vs-rest) trained by dual coordinate ascent.

Each binary problem appends a constant ``bias_scale`` feature so the bias is
part of the weight vector; the dual then has only box constraints
``0 <= alpha_i <= C`` and every single-coordinate update is solved exactly.
Training stops once every point meets the KKT conditions within
``tolerance``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import _kernels
from .data_model import MovementClass, sort_classes
from .errors import ConfigError, DataError, NumericError, ShapeMismatch
from .features import FeatureVector, Scaler

log = logging.getLogger(__name__)

FORMAT_TAG = "wristarc-svm"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0
    tolerance: float = 1e-3
    # epoch cap; None means 10 * n_samples
    max_passes: int | None = None
    seed: int = 0
    bias_scale: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError(f"C must be > 0, got {self.c}")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        if self.max_passes is not None and self.max_passes < 1:
            raise ConfigError("max_passes must be >= 1")
        if not self.bias_scale > 0:
            raise ConfigError("bias_scale must be > 0")


@dataclass
class BinaryResult:
    """Solution of one class-vs-rest problem."""

    w: np.ndarray
    b: float
    alpha: np.ndarray
    objective: list[float]
    epochs: int
    converged: bool
    max_violation: float


def dual_objective(alpha: np.ndarray, w_aug: np.ndarray) -> float:
    return float(alpha.sum() - 0.5 * w_aug @ w_aug)


def kkt_violation(margins: np.ndarray, alpha: np.ndarray, c: float) -> np.ndarray:
    """Per-point KKT violation given ``margins = y * f(x)``."""
    g = margins - 1.0
    at_lower = alpha <= 0.0
    at_upper = alpha >= c
    free = ~(at_lower | at_upper)
    v = np.zeros_like(g)
    v[at_lower] = np.maximum(0.0, -g[at_lower])
    v[at_upper] = np.maximum(0.0, g[at_upper])
    v[free] = np.abs(g[free])
    return v


def solve_binary(
    X: np.ndarray,
    y: np.ndarray,
    c: float,
    tolerance: float = 1e-3,
    max_passes: int | None = None,
    rng: np.random.Generator | None = None,
    bias_scale: float = 1.0,
) -> BinaryResult:
    """Train one binary soft-margin SVM with labels ``y`` in {-1, +1}."""
    n, d = X.shape
    rng = rng or np.random.default_rng(0)
    Xa = np.ascontiguousarray(np.hstack([X, np.full((n, 1), bias_scale)]))
    y = np.ascontiguousarray(y, dtype=np.float64)
    qii = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    w = np.zeros(d + 1)
    cap = max_passes if max_passes is not None else 10 * n
    objective = [0.0]
    converged = False
    viol = np.inf
    epoch = 0
    while epoch < cap:
        epoch += 1
        order = rng.permutation(n).astype(np.int64)
        _kernels.dcd_epoch(Xa, y, alpha, w, qii, order, float(c))
        objective.append(dual_objective(alpha, w))
        viol = float(kkt_violation(y * (Xa @ w), alpha, c).max())
        if viol <= tolerance:
            converged = True
            break
    if not np.all(np.isfinite(w)):
        raise NumericError("SVM weights became non-finite")
    if not converged:
        log.warning("SVM did not reach KKT tolerance %g after %d epochs (max violation %g)",
                    tolerance, epoch, viol)
    return BinaryResult(w[:d].copy(), float(w[d] * bias_scale), alpha, objective,
                        epoch, converged, viol)


@dataclass(eq=False)
class SvmModel:
    classes: list[MovementClass]
    weights: np.ndarray  # (n_classes, dim)
    biases: np.ndarray  # (n_classes,)
    scaler: Scaler
    training: list[BinaryResult] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.biases = np.asarray(self.biases, dtype=np.float64).reshape(-1)
        k = len(self.classes)
        if self.weights.shape[0] != k or self.biases.shape != (k,):
            raise ShapeMismatch("one weight vector and bias per class required")
        if self.scaler.dim != self.weights.shape[1]:
            raise ShapeMismatch("scaler dimension does not match the weights")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ShapeMismatch(f"expected {self.dim} features, got {X.shape[1]}")
        return self.scaler.transform(X) @ self.weights.T + self.biases

    def predict(self, X: np.ndarray) -> list[MovementClass]:
        # argmax returns the first (lowest-index) class on ties
        idx = np.argmax(self.decision_function(X), axis=1)
        return [self.classes[i] for i in idx]


def _xy(train) -> tuple[np.ndarray, list[MovementClass]]:
    if isinstance(train, tuple):
        X, labels = train
        return np.asarray(X, dtype=np.float64), list(labels)
    if not train:
        raise DataError("empty training set")
    if any(v.label is None for v in train):
        raise DataError("all training vectors need labels")
    return np.vstack([v.values for v in train]), [v.label for v in train]


def train_svm(
    train: Sequence[FeatureVector] | tuple[np.ndarray, Sequence[MovementClass]],
    cfg: SvmConfig = SvmConfig(),
    scaler: Scaler | None = None,
) -> SvmModel:
    """One-vs-rest training.

    ``train`` is either labelled feature vectors or an ``(X, labels)`` pair.
    The inputs must already be standardised; ``scaler`` (identity when
    omitted) is attached to the model and applied at prediction time.
    """
    X, labels = _xy(train)
    if X.shape[0] == 0:
        raise DataError("empty training set")
    if X.shape[0] != len(labels):
        raise ShapeMismatch("feature rows and labels differ in length")
    classes = sort_classes(labels)
    if len(classes) < 2:
        raise DataError("SVM training needs at least two classes")
    scaler = scaler or Scaler.identity(X.shape[1])
    lab = np.array([c.order for c in labels])
    results = []
    for k, cls in enumerate(classes):
        y = np.where(lab == cls.order, 1.0, -1.0)
        rng = np.random.default_rng([cfg.seed, k])
        results.append(solve_binary(X, y, cfg.c, cfg.tolerance, cfg.max_passes, rng,
                                    cfg.bias_scale))
    return SvmModel(
        classes=classes,
        weights=np.vstack([r.w for r in results]),
        biases=np.array([r.b for r in results]),
        scaler=scaler,
        training=results,
    )


def predict_svm(model: SvmModel, v: FeatureVector | np.ndarray):
    """Predicted class and per-class scores for one feature vector."""
    x = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeMismatch("predict_svm takes a single vector")
    scores = model.decision_function(x)[0]
    return model.classes[int(np.argmax(scores))], scores


# ---------------------------------------------------------------------------
# serialisation


def write_svm(model: SvmModel, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    d = model.dim
    w.writerow([FORMAT_TAG, FORMAT_VERSION])
    w.writerow(["class", "b"] + [f"w_{i + 1}" for i in range(d)])
    for cls, b, wk in zip(model.classes, model.biases, model.weights):
        w.writerow([cls.value, repr(float(b))] + [repr(float(v)) for v in wk])
    s = model.scaler
    w.writerow(["scaler_mean", ""] + [repr(float(v)) for v in s.mean])
    w.writerow(["scaler_std", ""] + [repr(0.0 if c else float(v)) for v, c in zip(s.std, s.constant)])


def serialize_svm(model: SvmModel) -> str:
    buf = io.StringIO()
    write_svm(model, buf)
    return buf.getvalue()


def read_svm(stream: IO[str] | str) -> SvmModel:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = [r for r in csv.reader(stream) if r]
    if len(rows) < 4 or rows[0][0] != FORMAT_TAG:
        raise DataError("not an SVM model file")
    if int(rows[0][1]) != FORMAT_VERSION:
        raise DataError(f"unsupported SVM model version {rows[0][1]}")
    classes, biases, weights, mean, std = [], [], [], None, None
    for r in rows[2:]:
        vals = [float(v) for v in r[2:]]
        if r[0] == "scaler_mean":
            mean = np.array(vals)
        elif r[0] == "scaler_std":
            std = np.array(vals)
        else:
            classes.append(MovementClass.parse(r[0]))
            biases.append(float(r[1]))
            weights.append(vals)
    if mean is None or std is None:
        raise DataError("SVM model file lacks scaler rows")
    return SvmModel(classes, np.array(weights), np.array(biases), Scaler(mean, std))
