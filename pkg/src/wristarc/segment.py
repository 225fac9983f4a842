"""Candidate segment extraction: rest-bounded actions, fixed windows, and peak spotting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .data_model import ACC, CHANNEL_NAMES, MovementClass, Recording, Segment
from .errors import ConfigError, DataError
from .preprocess import moving_average, window_samples


@dataclass(frozen=True)
class RestConfig:
    energy_window_s: float = 0.5
    energy_threshold: float = 0.05
    min_rest_s: float = 2.0
    min_action_s: float = 0.5

    def __post_init__(self):
        for name in ("energy_window_s", "energy_threshold", "min_rest_s", "min_action_s"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.min_rest_s > 5.0:
            raise ConfigError("min_rest_s may not exceed the 5 s protocol rest")


@dataclass(frozen=True)
class WindowConfig:
    window_s: float = 3.0

    def __post_init__(self):
        if not self.window_s > 0:
            raise ConfigError("window_s must be > 0")


@dataclass(frozen=True)
class SpotConfig:
    margin_before_s: float = 0.25
    margin_after_s: float = 0.25
    # None selects the Euclidean norm of the three acceleration channels
    peak_channel: str | None = None

    def __post_init__(self):
        if self.margin_before_s < 0 or self.margin_after_s < 0:
            raise ConfigError("spotting margins must be >= 0")
        if self.peak_channel is not None and self.peak_channel not in CHANNEL_NAMES:
            raise ConfigError(f"unknown peak channel {self.peak_channel!r}")

    def margins(self, sample_rate: float) -> tuple[int, int]:
        return (
            int(round(self.margin_before_s * sample_rate)),
            int(round(self.margin_after_s * sample_rate)),
        )

    def length(self, sample_rate: float) -> int:
        before, after = self.margins(sample_rate)
        return before + after + 1


def acceleration_norm(samples: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(samples[:, ACC] ** 2, axis=1))


def short_time_energy(recording: Recording, cfg: RestConfig = RestConfig()) -> np.ndarray:
    """Centred running mean of the squared acceleration norm."""
    acc = recording.samples[:, ACC]
    sq = np.einsum("ij,ij->i", acc, acc)
    return moving_average(sq, window_samples(cfg.energy_window_s, recording.sample_rate))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, end)`` runs where ``mask`` is true."""
    padded = np.concatenate([[False], mask, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return list(zip(edges[0::2].tolist(), edges[1::2].tolist()))


def segment_by_rest(recording: Recording, cfg: RestConfig = RestConfig()) -> list[Segment]:
    """Split a drift-free recording at sustained low-energy stretches.

    Sub-threshold runs of at least ``min_rest_s`` count as rest; every maximal
    stretch between rests that lasts at least ``min_action_s`` is a segment.
    """
    rate = recording.sample_rate
    min_rest = max(1, int(round(cfg.min_rest_s * rate)))
    min_action = max(1, int(round(cfg.min_action_s * rate)))
    quiet = short_time_energy(recording, cfg) < cfg.energy_threshold
    rest = np.zeros_like(quiet)
    for s, e in _runs(quiet):
        if e - s >= min_rest:
            rest[s:e] = True
    return [
        Segment(s, e, recording_id=recording.recording_id)
        for s, e in _runs(~rest)
        if e - s >= min_action
    ]


def sliding_windows(recording: Recording, cfg: WindowConfig = WindowConfig()) -> list[Segment]:
    """Disjoint windows of ``round(window_s * rate)`` samples; a short tail is dropped."""
    w = int(round(cfg.window_s * recording.sample_rate))
    if w < 1:
        raise ConfigError("window shorter than one sample")
    n = recording.n_samples // w
    rid = recording.recording_id
    return [Segment(i * w, (i + 1) * w, recording_id=rid) for i in range(n)]


def peak_signal(recording: Recording, cfg: SpotConfig = SpotConfig()) -> np.ndarray:
    if cfg.peak_channel is None:
        return acceleration_norm(recording.samples)
    return recording.samples[:, CHANNEL_NAMES.index(cfg.peak_channel)]


def spot_gesture(
    recording: Recording,
    segment: Segment,
    cfg: SpotConfig = SpotConfig(),
    signal: np.ndarray | None = None,
) -> Segment:
    """Region around the highest peak of ``segment``.

    ``signal`` may carry a precomputed peak channel for the whole recording.
    """
    if segment.end > recording.n_samples:
        raise DataError("segment exceeds recording")
    if signal is None:
        signal = peak_signal(recording, cfg)
    # np.argmax returns the first maximum
    p = segment.start + int(np.argmax(signal[segment.start : segment.end]))
    before, after = cfg.margins(recording.sample_rate)
    return Segment(
        max(segment.start, p - before),
        min(segment.end, p + after + 1),
        label=segment.label,
        recording_id=segment.recording_id,
    )


# ---------------------------------------------------------------------------
# segment CSV


def write_segments(segments: Iterable[Segment], stream: IO[str]) -> None:
    stream.write("start_index,end_index,label\n")
    for s in segments:
        stream.write(f"{s.start},{s.end},{s.label.value if s.label else ''}\n")


def read_segments(stream: IO[str] | str, recording_id: str = "") -> list[Segment]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = []
    for lineno, row in enumerate(csv.reader(stream), 1):
        if not row:
            continue
        if lineno == 1 and row[0] == "start_index":
            continue
        if len(row) not in (2, 3):
            raise DataError(f"line {lineno}: expected start_index,end_index,label")
        label = MovementClass.parse(row[2]) if len(row) == 3 and row[2].strip() else None
        out.append(Segment(int(row[0]), int(row[1]), label, recording_id))
    return out
