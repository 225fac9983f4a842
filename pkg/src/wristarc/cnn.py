"""Compact EEGNet-style 1-D CNN with hand-written backward pass.

Layer stack for an input window of shape ``(C, T)``::

    per-channel input z-scoring
    temporal conv      F1 filters x K samples, same padding, shared over channels
    norm1              per temporal filter
    depthwise conv     D spatial filters per temporal filter, collapses C
    norm2, ELU, avg-pool(pool1), dropout
    separable conv     per-map temporal kernel (16) then pointwise F1*D -> F2
    norm3, ELU, avg-pool(pool2), dropout
    dense, softmax

The ``norm`` layers are affine maps ``gamma * (z - mean) / sqrt(var + eps) +
beta`` whose mean/var are running statistics refreshed from each training
batch; gradients treat them as constants so the backward pass is exact for
the forward pass that produced the loss.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field
from typing import IO, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .data_model import MovementClass
from .errors import ConfigError, DataError, NumericError, ShapeMismatch

NORM_EPS = 1e-5
LOG_CLAMP = 1e-12
# windows used to initialise the normalisation statistics before training
CALIBRATION_WINDOWS = 128
FORMAT_MAGIC = b"WRISTARC-CNN\n"
FORMAT_VERSION = 1

PARAM_NAMES = (
    "temporal", "norm1_gamma", "norm1_beta",
    "depthwise", "norm2_gamma", "norm2_beta",
    "sep_depth", "sep_point", "norm3_gamma", "norm3_beta",
    "dense_w", "dense_b",
)
BUFFER_NAMES = (
    "input_mean", "input_std",
    "norm1_mean", "norm1_var", "norm2_mean", "norm2_var", "norm3_mean", "norm3_var",
)


@dataclass(frozen=True)
class CnnConfig:
    channels: int = 12
    time_points: int = 300
    temporal_filters: int = 8
    depth_multiplier: int = 2
    separable_filters: int | None = None
    temporal_kernel: int | None = None
    separable_kernel: int = 16
    pool1: int = 4
    pool2: int = 8
    dropout_rate: float = 0.25
    classes: int = 4
    seed: int = 0
    sample_rate: float | None = 100.0

    def __post_init__(self):
        if self.separable_filters is None:
            object.__setattr__(self, "separable_filters",
                               self.temporal_filters * self.depth_multiplier)
        half_rate = None if self.sample_rate is None else int(round(self.sample_rate / 2))
        if self.temporal_kernel is None:
            if half_rate is None:
                raise ConfigError("temporal_kernel or sample_rate is required")
            object.__setattr__(self, "temporal_kernel", half_rate)
        elif half_rate is not None and self.temporal_kernel != half_rate:
            raise ConfigError(
                f"temporal_kernel {self.temporal_kernel} must equal half the sample "
                f"rate ({half_rate}); set sample_rate=None to override"
            )
        for name in ("channels", "time_points", "temporal_filters", "depth_multiplier",
                     "separable_filters", "temporal_kernel", "separable_kernel",
                     "pool1", "pool2"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.classes < 2:
            raise ConfigError("classes must be >= 2")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if self.pooled_length < 1:
            raise ConfigError(
                f"time_points={self.time_points} leaves no samples after pooling by "
                f"{self.pool1} and {self.pool2}"
            )

    @property
    def maps(self) -> int:
        return self.temporal_filters * self.depth_multiplier

    @property
    def pooled_length(self) -> int:
        return (self.time_points // self.pool1) // self.pool2

    @property
    def dense_inputs(self) -> int:
        return self.separable_filters * self.pooled_length


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    patience: int = 15
    norm_momentum: float = 0.1

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, epochs and patience must be >= 1")
        if not 0.0 <= self.norm_momentum <= 1.0:
            raise ConfigError("norm_momentum must lie in [0, 1]")


@dataclass(eq=False)
class CnnModel:
    cfg: CnnConfig
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray]
    class_list: list[MovementClass] | None = None
    history: list[tuple[int, float, float]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        expected = param_shapes(self.cfg)
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {self.params[name].shape}")
        if self.class_list is not None and len(self.class_list) != self.cfg.classes:
            raise ShapeMismatch("class list length differs from cfg.classes")

    def copy(self) -> "CnnModel":
        return CnnModel(
            self.cfg,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
            list(self.class_list) if self.class_list is not None else None,
            list(self.history),
        )


def param_shapes(cfg: CnnConfig) -> dict[str, tuple[int, ...]]:
    f1, m, f2 = cfg.temporal_filters, cfg.maps, cfg.separable_filters
    return {
        "temporal": (f1, cfg.temporal_kernel),
        "norm1_gamma": (f1,), "norm1_beta": (f1,),
        "depthwise": (m, cfg.channels),
        "norm2_gamma": (m,), "norm2_beta": (m,),
        "sep_depth": (m, cfg.separable_kernel),
        "sep_point": (f2, m),
        "norm3_gamma": (f2,), "norm3_beta": (f2,),
        "dense_w": (cfg.classes, cfg.dense_inputs),
        "dense_b": (cfg.classes,),
    }


def build_cnn(cfg: CnnConfig, class_list: Sequence[MovementClass] | None = None) -> CnnModel:
    """Fresh model with LeCun-uniform weights (variance 1/fan_in), seeded by ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    shapes = param_shapes(cfg)
    fan_in = {
        "temporal": cfg.temporal_kernel,
        "depthwise": cfg.channels,
        "sep_depth": cfg.separable_kernel,
        "sep_point": cfg.maps,
        "dense_w": cfg.dense_inputs,
    }
    params = {}
    for name in PARAM_NAMES:
        shape = shapes[name]
        if name in fan_in:
            limit = np.sqrt(3.0 / fan_in[name])
            params[name] = rng.uniform(-limit, limit, size=shape)
        elif name.endswith("gamma"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    buffers = {
        "input_mean": np.zeros(cfg.channels), "input_std": np.ones(cfg.channels),
        "norm1_mean": np.zeros(cfg.temporal_filters), "norm1_var": np.ones(cfg.temporal_filters),
        "norm2_mean": np.zeros(cfg.maps), "norm2_var": np.ones(cfg.maps),
        "norm3_mean": np.zeros(cfg.separable_filters), "norm3_var": np.ones(cfg.separable_filters),
    }
    return CnnModel(cfg, params, buffers, list(class_list) if class_list is not None else None)


# ---------------------------------------------------------------------------
# layer primitives (batch-first)


def _same_pad(x: np.ndarray, k: int) -> np.ndarray:
    left = (k - 1) // 2
    pad = [(0, 0)] * (x.ndim - 1) + [(left, k - 1 - left)]
    return np.pad(x, pad)


def temporal_conv(x: np.ndarray, w: np.ndarray):
    """``(N, C, T)`` x ``(F, K)`` -> ``(N, F, C, T)``; also returns the window view."""
    k = w.shape[1]
    win = sliding_window_view(_same_pad(x, k), k, axis=2)  # (N, C, T, K)
    out = np.tensordot(win, w, axes=([3], [1]))  # (N, C, T, F)
    return np.moveaxis(out, 3, 1), win


def depthwise_conv1d(x: np.ndarray, w: np.ndarray):
    """Per-map temporal correlation, same padding: ``(N, M, T)`` x ``(M, K)``."""
    k = w.shape[1]
    win = sliding_window_view(_same_pad(x, k), k, axis=2)  # (N, M, T, K)
    return np.einsum("nmtk,mk->nmt", win, w), win


def depthwise_conv1d_backward(grad: np.ndarray, win: np.ndarray, w: np.ndarray):
    k = w.shape[1]
    dw = np.einsum("nmt,nmtk->mk", grad, win)
    t = grad.shape[2]
    dpad = np.zeros(grad.shape[:2] + (t + k - 1,))
    for j in range(k):
        dpad[:, :, j : j + t] += grad * w[None, :, j, None]
    left = (k - 1) // 2
    return dpad[:, :, left : left + t], dw


def pointwise_conv(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Mix maps at every time step: ``(N, M, T)`` x ``(F, M)`` -> ``(N, F, T)``."""
    return np.einsum("nmt,fm->nft", x, w)


def conv1d_full(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Dense multi-channel correlation, same padding: ``(N, M, T)`` x ``(F, M, K)``."""
    k = w.shape[2]
    win = sliding_window_view(_same_pad(x, k), k, axis=2)
    return np.einsum("nmtk,fmk->nft", win, w)


def _norm(z, gamma, mean, var, beta, axis_shape):
    inv = 1.0 / np.sqrt(var + NORM_EPS)
    zhat = (z - mean.reshape(axis_shape)) * inv.reshape(axis_shape)
    return gamma.reshape(axis_shape) * zhat + beta.reshape(axis_shape), zhat, inv


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def avg_pool(x: np.ndarray, p: int) -> np.ndarray:
    t = x.shape[-1] // p
    return x[..., : t * p].reshape(x.shape[:-1] + (t, p)).mean(axis=-1)


def avg_pool_backward(grad: np.ndarray, p: int, t_in: int) -> np.ndarray:
    out = np.zeros(grad.shape[:-1] + (t_in,))
    t = grad.shape[-1]
    out[..., : t * p] = np.repeat(grad / p, p, axis=-1)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# forward / backward


def _check_input(model: CnnModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    cfg = model.cfg
    if x.ndim != 3 or x.shape[1:] != (cfg.channels, cfg.time_points):
        raise ShapeMismatch(
            f"expected windows of shape ({cfg.channels}, {cfg.time_points}), got {x.shape[-2:]}"
        )
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite values in CNN input")
    return x


def _refresh(B, stage, z, axes, momentum):
    if momentum is None:
        return
    B[f"{stage}_mean"] = (1 - momentum) * B[f"{stage}_mean"] + momentum * z.mean(axis=axes)
    B[f"{stage}_var"] = (1 - momentum) * B[f"{stage}_var"] + momentum * z.var(axis=axes)


def _forward(model: CnnModel, x: np.ndarray, train_mode: bool, rng, momentum=None):
    """Forward pass keeping intermediates for backprop.

    With ``momentum`` set, each normalisation layer first folds the batch
    statistics of its input into the running statistics it then applies.
    """
    cfg, P, B = model.cfg, model.params, model.buffers
    n = x.shape[0]
    c = {}
    xn = (x - B["input_mean"][None, :, None]) / B["input_std"][None, :, None]
    z1, c["win1"] = temporal_conv(xn, P["temporal"])  # (N, F1, C, T)
    _refresh(B, "norm1", z1, (0, 2, 3), momentum)
    h1, c["zhat1"], c["inv1"] = _norm(z1, P["norm1_gamma"], B["norm1_mean"], B["norm1_var"],
                                      P["norm1_beta"], (1, -1, 1, 1))
    c["h1"] = h1
    f1, d = cfg.temporal_filters, cfg.depth_multiplier
    wd = P["depthwise"].reshape(f1, d, cfg.channels)
    z2 = np.einsum("nfct,fdc->nfdt", h1, wd).reshape(n, cfg.maps, cfg.time_points)
    _refresh(B, "norm2", z2, (0, 2), momentum)
    h2, c["zhat2"], c["inv2"] = _norm(z2, P["norm2_gamma"], B["norm2_mean"], B["norm2_var"],
                                      P["norm2_beta"], (1, -1, 1))
    c["h2"] = h2
    a2 = elu(h2)
    c["a2"] = a2
    p1 = avg_pool(a2, cfg.pool1)
    if train_mode and cfg.dropout_rate > 0:
        keep = 1.0 - cfg.dropout_rate
        c["mask1"] = (rng.random(p1.shape) < keep) / keep
        p1 = p1 * c["mask1"]
    z3a, c["win3"] = depthwise_conv1d(p1, P["sep_depth"])
    c["z3a"] = z3a
    z3 = pointwise_conv(z3a, P["sep_point"])
    _refresh(B, "norm3", z3, (0, 2), momentum)
    h3, c["zhat3"], c["inv3"] = _norm(z3, P["norm3_gamma"], B["norm3_mean"], B["norm3_var"],
                                      P["norm3_beta"], (1, -1, 1))
    c["h3"] = h3
    a3 = elu(h3)
    c["a3"] = a3
    p2 = avg_pool(a3, cfg.pool2)
    if train_mode and cfg.dropout_rate > 0:
        keep = 1.0 - cfg.dropout_rate
        c["mask2"] = (rng.random(p2.shape) < keep) / keep
        p2 = p2 * c["mask2"]
    flat = p2.reshape(n, -1)
    c["flat"] = flat
    logits = flat @ P["dense_w"].T + P["dense_b"]
    return softmax(logits), c


def forward(model: CnnModel, window: np.ndarray, train_mode: bool = False,
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Class probabilities for one ``(C, T)`` window or a ``(N, C, T)`` batch.

    ``train_mode`` enables dropout, drawn from ``rng``.
    """
    x = _check_input(model, window)
    if train_mode and rng is None:
        rng = np.random.default_rng(model.cfg.seed)
    p, _ = _forward(model, x, train_mode, rng)
    return p[0] if np.asarray(window).ndim == 2 else p


def _label_indices(model: CnnModel, labels) -> np.ndarray:
    out = []
    for lab in labels:
        if isinstance(lab, MovementClass):
            if model.class_list is None or lab not in model.class_list:
                raise DataError(f"label {lab.value} is not in the model's class list")
            out.append(model.class_list.index(lab))
        else:
            i = int(lab)
            if not 0 <= i < model.cfg.classes:
                raise DataError(f"label index {i} outside [0, {model.cfg.classes})")
            out.append(i)
    return np.array(out, dtype=np.int64)


def loss_and_gradients(model: CnnModel, windows: np.ndarray, labels, train_mode: bool = False,
                       rng: np.random.Generator | None = None,
                       norm_momentum: float | None = None):
    """Mean cross-entropy over the batch and its gradient for every parameter.

    ``norm_momentum`` refreshes the normalisation statistics from this batch
    before they are applied (training only; gradients treat them as fixed).
    """
    x = _check_input(model, windows)
    y = _label_indices(model, labels)
    if len(y) == 0 or len(y) != x.shape[0]:
        raise DataError("batch must be non-empty with one label per window")
    if train_mode and rng is None:
        rng = np.random.default_rng(model.cfg.seed)
    cfg, P = model.cfg, model.params
    n = x.shape[0]
    prob, c = _forward(model, x, train_mode, rng, norm_momentum)
    py = prob[np.arange(n), y]
    clamped = py < LOG_CLAMP
    loss = float(-np.mean(np.log(np.maximum(py, LOG_CLAMP))))

    g = {}
    dlogits = prob.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits[clamped] = 0.0
    dlogits /= n
    g["dense_w"] = dlogits.T @ c["flat"]
    g["dense_b"] = dlogits.sum(axis=0)
    dp2 = (dlogits @ P["dense_w"]).reshape(n, cfg.separable_filters, cfg.pooled_length)
    if "mask2" in c:
        dp2 = dp2 * c["mask2"]
    t1 = cfg.time_points // cfg.pool1
    da3 = avg_pool_backward(dp2, cfg.pool2, t1)
    dh3 = da3 * np.where(c["h3"] > 0, 1.0, c["a3"] + 1.0)
    g["norm3_gamma"] = np.einsum("nft,nft->f", dh3, c["zhat3"])
    g["norm3_beta"] = dh3.sum(axis=(0, 2))
    dz3 = dh3 * (P["norm3_gamma"] * c["inv3"])[None, :, None]
    g["sep_point"] = np.einsum("nft,nmt->fm", dz3, c["z3a"])
    dz3a = np.einsum("nft,fm->nmt", dz3, P["sep_point"])
    dp1, g["sep_depth"] = depthwise_conv1d_backward(dz3a, c["win3"], P["sep_depth"])
    if "mask1" in c:
        dp1 = dp1 * c["mask1"]
    da2 = avg_pool_backward(dp1, cfg.pool1, cfg.time_points)
    dh2 = da2 * np.where(c["h2"] > 0, 1.0, c["a2"] + 1.0)
    g["norm2_gamma"] = np.einsum("nmt,nmt->m", dh2, c["zhat2"])
    g["norm2_beta"] = dh2.sum(axis=(0, 2))
    dz2 = dh2 * (P["norm2_gamma"] * c["inv2"])[None, :, None]
    f1, d = cfg.temporal_filters, cfg.depth_multiplier
    dz2 = dz2.reshape(n, f1, d, cfg.time_points)
    wd = P["depthwise"].reshape(f1, d, cfg.channels)
    g["depthwise"] = np.einsum("nfdt,nfct->fdc", dz2, c["h1"]).reshape(cfg.maps, cfg.channels)
    dh1 = np.einsum("nfdt,fdc->nfct", dz2, wd)
    g["norm1_gamma"] = np.einsum("nfct,nfct->f", dh1, c["zhat1"])
    g["norm1_beta"] = dh1.sum(axis=(0, 2, 3))
    dz1 = dh1 * (P["norm1_gamma"] * c["inv1"])[None, :, None, None]
    g["temporal"] = np.tensordot(dz1, c["win1"], axes=([0, 2, 3], [0, 1, 2]))
    return loss, g


# ---------------------------------------------------------------------------
# training


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name in PARAM_NAMES:
            g = grads[name]
            m = self.m.setdefault(name, np.zeros_like(g))
            v = self.v.setdefault(name, np.zeros_like(g))
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def predict_proba(model: CnnModel, windows: np.ndarray, batch_size: int = 64) -> np.ndarray:
    x = _check_input(model, windows)
    return np.vstack([_forward(model, x[i : i + batch_size], False, None)[0]
                      for i in range(0, x.shape[0], batch_size)])


def predict(model: CnnModel, windows: np.ndarray) -> list:
    idx = np.argmax(predict_proba(model, windows), axis=1)
    if model.class_list is None:
        return idx.tolist()
    return [model.class_list[i] for i in idx]


def accuracy(model: CnnModel, windows: np.ndarray, labels) -> float:
    y = _label_indices(model, labels)
    return float(np.mean(np.argmax(predict_proba(model, windows), axis=1) == y))


def train_cnn(
    train: tuple[np.ndarray, Sequence],
    val: tuple[np.ndarray, Sequence],
    cfg: CnnConfig,
    opt: TrainConfig = TrainConfig(),
    class_list: Sequence[MovementClass] | None = None,
) -> CnnModel:
    """Minibatch Adam training with best-validation-accuracy snapshotting.

    Labels are ``MovementClass`` values (``class_list`` required) or integer
    indices.  Input z-scoring statistics come from the training windows; the
    normalisation statistics are initialised from a random subset of the
    training windows and then tracked with ``opt.norm_momentum`` per batch.  Stops after
    ``opt.patience`` epochs without a strict improvement.
    """
    xtr = np.asarray(train[0], dtype=np.float64)
    xva = np.asarray(val[0], dtype=np.float64)
    if len(xtr) == 0 or len(xva) == 0:
        raise DataError("train and validation splits must be non-empty")
    if xtr.shape[1:] != xva.shape[1:]:
        raise ShapeMismatch("train and validation windows differ in shape")
    if class_list is None and any(isinstance(l, MovementClass) for l in train[1]):
        raise DataError("class_list is required for MovementClass labels")
    model = build_cnn(cfg, class_list)
    _check_input(model, xtr)
    ytr = _label_indices(model, train[1])
    yva = _label_indices(model, val[1])

    mean = xtr.mean(axis=(0, 2))
    std = xtr.std(axis=(0, 2))
    model.buffers["input_mean"] = mean
    model.buffers["input_std"] = np.where(std > 1e-12, std, 1.0)
    rng = np.random.default_rng([cfg.seed, 1])
    calib = xtr[rng.permutation(len(xtr))[:CALIBRATION_WINDOWS]]
    _forward(model, calib, False, None, momentum=1.0)

    adam = Adam(opt.learning_rate)
    best = model.copy()
    best_acc = -1.0
    stale = 0
    n = len(xtr)
    for epoch in range(1, opt.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for i in range(0, n, opt.batch_size):
            idx = order[i : i + opt.batch_size]
            momentum = opt.norm_momentum if opt.learning_rate > 0 else None
            loss, grads = loss_and_gradients(model, xtr[idx], ytr[idx], train_mode=True,
                                             rng=rng, norm_momentum=momentum)
            adam.step(model.params, grads)
            total += loss * len(idx)
        if not all(np.all(np.isfinite(v)) for v in model.params.values()):
            raise NumericError(f"CNN parameters became non-finite at epoch {epoch}")
        val_acc = float(np.mean(np.argmax(predict_proba(model, xva), axis=1) == yva))
        model.history.append((epoch, total / n, val_acc))
        if val_acc > best_acc:
            best_acc = val_acc
            best = model.copy()
            stale = 0
        else:
            stale += 1
            if stale >= opt.patience:
                break
    best.history = list(model.history)
    return best


# ---------------------------------------------------------------------------
# serialisation: magic line, JSON header, raw little-endian float64 payload


def write_cnn(model: CnnModel, stream: IO[bytes]) -> None:
    tensors = [(f"param/{k}", model.params[k]) for k in PARAM_NAMES]
    tensors += [(f"buffer/{k}", model.buffers[k]) for k in BUFFER_NAMES]
    header = {
        "version": FORMAT_VERSION,
        "config": asdict(model.cfg),
        "classes": [c.value for c in model.class_list] if model.class_list else None,
        "tensors": [{"name": n, "shape": list(t.shape)} for n, t in tensors],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    stream.write(FORMAT_MAGIC)
    stream.write(struct.pack("<Q", len(blob)))
    stream.write(blob)
    for _, t in tensors:
        stream.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def serialize_cnn(model: CnnModel) -> bytes:
    buf = io.BytesIO()
    write_cnn(model, buf)
    return buf.getvalue()


def read_cnn(stream: IO[bytes] | bytes) -> CnnModel:
    data = stream if isinstance(stream, bytes) else stream.read()
    if not data.startswith(FORMAT_MAGIC):
        raise DataError("not a CNN model file")
    off = len(FORMAT_MAGIC)
    (hlen,) = struct.unpack_from("<Q", data, off)
    off += 8
    header = json.loads(data[off : off + hlen])
    off += hlen
    if header["version"] != FORMAT_VERSION:
        raise DataError(f"unsupported CNN model version {header['version']}")
    cfg = CnnConfig(**header["config"])
    params, buffers = {}, {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape).copy()
        off += 8 * count
        kind, name = spec["name"].split("/", 1)
        (params if kind == "param" else buffers)[name] = arr
    if off != len(data):
        raise DataError("trailing bytes in CNN model file")
    classes = header["classes"]
    return CnnModel(cfg, params, buffers,
                    [MovementClass(c) for c in classes] if classes else None)


def write_history(model: CnnModel, stream: IO[str]) -> None:
    stream.write("epoch,train_loss,val_acc\n")
    for epoch, loss, acc in model.history:
        stream.write(f"{epoch},{float(loss)!r},{float(acc)!r}\n")
