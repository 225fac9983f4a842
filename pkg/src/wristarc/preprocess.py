"""Drift compensation and the optional raw-IMU attitude fusion path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data_model import ACC, ATT, CHANNEL_NAMES, GYR, MAG, Recording, channel_indices
from .errors import ConfigError

ACC_CHANNELS = CHANNEL_NAMES[0:3]


@dataclass(frozen=True)
class DriftConfig:
    highpass_window_s: float = 2.0
    channels: tuple[str, ...] = ACC_CHANNELS

    def __post_init__(self):
        if not self.highpass_window_s > 0:
            raise ConfigError(f"highpass_window_s must be > 0, got {self.highpass_window_s}")
        channel_indices(self.channels)


@dataclass(frozen=True)
class FusionConfig:
    correction_gain: float = 0.1
    gravity_magnitude: float = 9.81
    use_magnetometer: bool = True

    def __post_init__(self):
        if not 0.0 <= self.correction_gain <= 1.0:
            raise ConfigError(f"correction_gain must lie in [0, 1], got {self.correction_gain}")
        if not self.gravity_magnitude > 0:
            raise ConfigError("gravity_magnitude must be > 0")


def window_samples(window_s: float, sample_rate: float) -> int:
    return max(1, int(round(window_s * sample_rate)))


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centred running mean along axis 0 with truncated windows at the edges.

    The window spans ``width // 2`` samples on each side, so an even width is
    widened by one sample to stay centred.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    half = width // 2
    cs = np.zeros((n + 1,) + x.shape[1:])
    np.cumsum(x, axis=0, out=cs[1:])
    idx = np.arange(n)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, n)
    count = (hi - lo).reshape((n,) + (1,) * (x.ndim - 1))
    return (cs[hi] - cs[lo]) / count


def remove_drift(recording: Recording, cfg: DriftConfig = DriftConfig()) -> Recording:
    """Subtract a centred moving average from the selected channels."""
    width = window_samples(cfg.highpass_window_s, recording.sample_rate)
    if width >= recording.n_samples:
        raise ConfigError(
            f"drift window of {width} samples is not shorter than the recording "
            f"({recording.n_samples} samples)"
        )
    cols = channel_indices(cfg.channels)
    out = recording.samples.copy()
    out[:, cols] -= moving_average(out[:, cols], width)
    return recording.with_samples(out)


# ---------------------------------------------------------------------------
# quaternion helpers, (w, x, y, z) body-to-world


def quat_to_euler(q: np.ndarray) -> np.ndarray:
    """Intrinsic Z-Y-X angles ``(yaw, pitch, roll)`` for quaternions ``(..., 4)``."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=np.float64), -1, 0)
    yaw = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    pitch = np.arcsin(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    return np.stack([yaw, pitch, roll], axis=-1)


def euler_to_quat(yaw: float, pitch: float, roll: float) -> np.ndarray:
    cy, sy = np.cos(yaw / 2), np.sin(yaw / 2)
    cp, sp = np.cos(pitch / 2), np.sin(pitch / 2)
    cr, sr = np.cos(roll / 2), np.sin(roll / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def gravity_in_body(q: np.ndarray, g: float) -> np.ndarray:
    """World vector ``(0, 0, g)`` expressed in the body frame."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=np.float64), -1, 0)
    return g * np.stack(
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z],
        axis=-1,
    )


def fuse_quaternions(
    raw: Recording, cfg: FusionConfig = FusionConfig(), q0: np.ndarray | None = None
) -> np.ndarray:
    """Attitude quaternion after each sample, shape ``(n_samples, 4)``.

    Each step integrates the gyro rate exactly over one period, rotates the
    predicted gravity direction a fraction ``correction_gain`` of the way to
    the measured accelerometer direction, optionally does the same for the
    horizontal magnetic heading, and renormalises.  Samples with a zero
    accelerometer vector skip the gravity correction.
    """
    x = raw.samples
    q0 = np.array([1.0, 0.0, 0.0, 0.0]) if q0 is None else np.asarray(q0, dtype=np.float64)
    if q0.shape != (4,) or not np.linalg.norm(q0) > 0:
        raise ConfigError("initial quaternion must be a non-zero 4-vector")
    return _kernels.fuse_quaternions(
        np.ascontiguousarray(x[:, GYR]),
        np.ascontiguousarray(x[:, ACC]),
        np.ascontiguousarray(x[:, MAG]),
        1.0 / raw.sample_rate,
        float(cfg.correction_gain),
        bool(cfg.use_magnetometer),
        np.ascontiguousarray(q0),
    )


def fuse_attitude(
    raw: Recording, cfg: FusionConfig = FusionConfig(), q0: np.ndarray | None = None
) -> Recording:
    """Replace attitude with fused Euler angles and acceleration with linear acceleration."""
    q = fuse_quaternions(raw, cfg, q0)
    out = raw.samples.copy()
    out[:, ATT] = quat_to_euler(q)
    out[:, ACC] = raw.samples[:, ACC] - gravity_in_body(q, cfg.gravity_magnitude)
    return raw.with_samples(out)
