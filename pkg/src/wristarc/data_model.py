"""Core domain types, the on-disk formats, and dual-wrist session alignment.

Recording CSV::

    t_ms,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z,mag_x,mag_y,mag_z,att_yaw,att_pitch,att_roll

with a ``key=value`` sidecar (``subject_id``, ``wrist``, ``scenario``,
``population``, ``sample_rate_hz`` and optionally ``session_id``).

Label CSV::

    start_ms,end_ms,class

Label times are milliseconds relative to the recording start.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyStream,
    InvalidInterval,
    MalformedRow,
    NonFiniteValue,
    NonMonotoneTimestamp,
    OverlappingIntervals,
    SegmentOutOfRange,
    SessionMismatch,
    TimestampGap,
    UnknownClass,
    UnsynchronizedPair,
)

DEFAULT_SAMPLE_RATE = 100.0
MAX_GAP_PERIODS = 1.5
MAX_ALIGN_SKEW_MS = 1000.0


class MovementClass(enum.Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    R7 = "R7"
    R8 = "R8"
    R9 = "R9"
    R10 = "R10"
    R11 = "R11"
    R12 = "R12"
    R13 = "R13"
    R14 = "R14"
    R15 = "R15"
    R16 = "R16"
    R17 = "R17"
    R18 = "R18"
    R19 = "R19"
    REST = "Rest"
    NULL = "Null"

    @property
    def kind(self) -> str:
        """One of ``"target"``, ``"nontarget"``, ``"rest"``, ``"null"``."""
        if self is MovementClass.REST:
            return "rest"
        if self is MovementClass.NULL:
            return "null"
        return "target" if self.value[0] == "M" else "nontarget"

    @property
    def is_target(self) -> bool:
        return self.kind == "target"

    @property
    def is_nontarget(self) -> bool:
        return self.kind == "nontarget"

    @property
    def order(self) -> int:
        return _CLASS_ORDER[self]

    @classmethod
    def parse(cls, tag: str) -> "MovementClass":
        try:
            return cls(tag.strip())
        except ValueError:
            raise UnknownClass(f"unknown class tag {tag!r}") from None


_CLASS_ORDER = {c: i for i, c in enumerate(MovementClass)}
TARGET_CLASSES = tuple(c for c in MovementClass if c.kind == "target")
NONTARGET_CLASSES = tuple(c for c in MovementClass if c.kind == "nontarget")


def sort_classes(classes: Iterable[MovementClass]) -> list[MovementClass]:
    """Unique classes in canonical order (M1..M4, R1..R19, Rest, Null)."""
    return sorted(set(classes), key=lambda c: c.order)


class ChannelId(NamedTuple):
    sensor: str
    axis: str

    @property
    def name(self) -> str:
        return f"{_SENSOR_PREFIX[self.sensor]}_{self.axis}"


_SENSOR_PREFIX = {
    "acceleration": "acc",
    "rotation_rate": "gyr",
    "magnetometer": "mag",
    "attitude": "att",
}

# canonical ordering; column index == position in this tuple
CHANNELS: tuple[ChannelId, ...] = tuple(
    ChannelId(sensor, axis)
    for sensor, axes in (
        ("acceleration", ("x", "y", "z")),
        ("rotation_rate", ("x", "y", "z")),
        ("magnetometer", ("x", "y", "z")),
        ("attitude", ("yaw", "pitch", "roll")),
    )
    for axis in axes
)
CHANNEL_NAMES: tuple[str, ...] = tuple(c.name for c in CHANNELS)
CSV_HEADER: tuple[str, ...] = ("t_ms",) + CHANNEL_NAMES
N_CHANNELS = len(CHANNELS)

ACC = slice(0, 3)
GYR = slice(3, 6)
MAG = slice(6, 9)
ATT = slice(9, 12)

# acceleration, rotation rate and the three Euler angles
NINE_CHANNELS: tuple[str, ...] = CHANNEL_NAMES[0:6] + CHANNEL_NAMES[9:12]


def channel_indices(names: Sequence[str] | None) -> list[int]:
    """Column indices for channel names; ``None`` selects all 12."""
    if names is None:
        return list(range(N_CHANNELS))
    out = []
    for n in names:
        try:
            out.append(CHANNEL_NAMES.index(n))
        except ValueError:
            raise DataError(f"unknown channel {n!r}") from None
    if len(set(out)) != len(out):
        raise DataError("duplicate channel in selection")
    return out


WRISTS = ("left", "right")
SCENARIOS = ("L1", "L2")
POPULATIONS = ("healthy", "patient")


@dataclass(frozen=True)
class RecordingMeta:
    subject_id: str
    wrist: str
    scenario: str
    population: str = "healthy"
    sample_rate: float = DEFAULT_SAMPLE_RATE
    session_id: str = ""

    def __post_init__(self):
        if self.wrist not in WRISTS:
            raise DataError(f"wrist must be one of {WRISTS}, got {self.wrist!r}")
        if self.scenario not in SCENARIOS:
            raise DataError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.population not in POPULATIONS:
            raise DataError(
                f"population must be one of {POPULATIONS}, got {self.population!r}"
            )
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise DataError(f"sample rate must be positive, got {self.sample_rate}")


@dataclass(frozen=True, eq=False)
class Recording:
    """Uniformly sampled 12-channel wrist recording.

    ``samples`` has shape ``(n_samples, 12)`` in canonical channel order and is
    made read-only on construction.  Sample ``i`` is taken at
    ``start_time + 1000 * i / sample_rate`` milliseconds.
    """

    samples: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE
    start_time: float = 0.0
    wrist: str = "left"
    subject_id: str = ""
    scenario: str = "L1"
    population: str = "healthy"
    session_id: str = ""

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != N_CHANNELS:
            raise DataError(f"samples must have shape (n, {N_CHANNELS}), got {x.shape}")
        if x.shape[0] < 1:
            raise EmptyStream("recording has no samples")
        if not np.all(np.isfinite(x)):
            raise DataError("recording contains non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        # validates the metadata fields
        self.meta

    @property
    def meta(self) -> RecordingMeta:
        return RecordingMeta(
            subject_id=self.subject_id,
            wrist=self.wrist,
            scenario=self.scenario,
            population=self.population,
            sample_rate=self.sample_rate,
            session_id=self.session_id,
        )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.sample_rate

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def recording_id(self) -> str:
        return f"{self.subject_id}/{self.session_id}/{self.wrist}"

    def times_ms(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) * self.period_ms

    def with_samples(self, samples: np.ndarray, **changes) -> "Recording":
        return replace(self, samples=samples, **changes)

    @classmethod
    def from_meta(cls, samples: np.ndarray, meta: RecordingMeta, start_time: float = 0.0):
        return cls(
            samples=samples,
            sample_rate=meta.sample_rate,
            start_time=start_time,
            wrist=meta.wrist,
            subject_id=meta.subject_id,
            scenario=meta.scenario,
            population=meta.population,
            session_id=meta.session_id,
        )


class Interval(NamedTuple):
    start: int
    end: int
    label: MovementClass


@dataclass(frozen=True)
class LabelTrack:
    """Sorted, non-overlapping labelled sample intervals (end exclusive)."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        ivs = tuple(Interval(int(s), int(e), MovementClass(c)) for s, e, c in self.intervals)
        prev = None
        for iv in ivs:
            if iv.start < 0 or iv.end <= iv.start:
                raise InvalidInterval(f"invalid interval {iv}")
            if prev is not None:
                if iv.start < prev.end:
                    raise OverlappingIntervals(f"{prev} overlaps {iv}")
                if iv.start == prev.end and iv.label == prev.label:
                    raise DataError(f"adjacent intervals {prev} and {iv} must be merged")
            prev = iv
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple[int, int, MovementClass]]) -> "LabelTrack":
        """Sort, check for overlap and merge touching same-class intervals."""
        ivs = sorted((Interval(int(s), int(e), c) for s, e, c in intervals), key=lambda v: v[:2])
        merged: list[Interval] = []
        for iv in ivs:
            if iv.end <= iv.start:
                raise InvalidInterval(f"invalid interval {iv}")
            if merged and iv.start < merged[-1].end:
                raise OverlappingIntervals(f"{merged[-1]} overlaps {iv}")
            if merged and iv.start == merged[-1].end and iv.label == merged[-1].label:
                merged[-1] = merged[-1]._replace(end=iv.end)
            else:
                merged.append(iv)
        return cls(tuple(merged))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def check_bounds(self, n_samples: int) -> None:
        if self.intervals and self.intervals[-1].end > n_samples:
            raise InvalidInterval(
                f"label interval {self.intervals[-1]} exceeds recording length {n_samples}"
            )

    def shifted(self, offset: int, n_samples: int | None = None) -> "LabelTrack":
        """Shift all intervals by ``offset`` samples, clipping to ``[0, n_samples)``."""
        out = []
        for s, e, c in self.intervals:
            s, e = s + offset, e + offset
            s = max(s, 0)
            if n_samples is not None:
                e = min(e, n_samples)
            if e > s:
                out.append((s, e, c))
        return LabelTrack.from_intervals(out)

    def overlaps(self, start: int, end: int) -> dict[MovementClass, int]:
        """Samples of ``[start, end)`` covered per class."""
        out: dict[MovementClass, int] = {}
        for s, e, c in self.intervals:
            if e <= start:
                continue
            if s >= end:
                break
            n = min(e, end) - max(s, start)
            if n > 0:
                out[c] = out.get(c, 0) + n
        return out


@dataclass(frozen=True)
class Segment:
    """Half-open sample interval ``[start, end)`` of one recording."""

    start: int
    end: int
    label: MovementClass | None = None
    recording_id: str = ""

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise SegmentOutOfRange(f"invalid segment [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Session:
    left: Recording
    right: Recording
    labels_left: LabelTrack = field(default_factory=LabelTrack)
    labels_right: LabelTrack = field(default_factory=LabelTrack)
    session_id: str = ""

    def __post_init__(self):
        if self.left.wrist != "left" or self.right.wrist != "right":
            raise SessionMismatch("session needs a left and a right recording")
        _check_pair(self.left, self.right)
        self.labels_left.check_bounds(self.left.n_samples)
        self.labels_right.check_bounds(self.right.n_samples)

    @property
    def subject_id(self) -> str:
        return self.left.subject_id

    @property
    def scenario(self) -> str:
        return self.left.scenario

    @property
    def population(self) -> str:
        return self.left.population

    def wrists(self) -> list[tuple[Recording, LabelTrack]]:
        return [(self.left, self.labels_left), (self.right, self.labels_right)]


def _check_pair(left: Recording, right: Recording) -> None:
    if left.subject_id != right.subject_id:
        raise SessionMismatch(
            f"subject mismatch: {left.subject_id!r} vs {right.subject_id!r}"
        )
    if left.scenario != right.scenario:
        raise SessionMismatch(f"scenario mismatch: {left.scenario} vs {right.scenario}")
    if left.sample_rate != right.sample_rate:
        raise SessionMismatch("sample rates differ")


# ---------------------------------------------------------------------------
# metadata sidecar


def parse_meta(stream: IO[str] | str) -> RecordingMeta:
    """Parse the ``key=value`` sidecar file."""
    text = stream if isinstance(stream, str) else stream.read()
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MalformedRow(lineno, "expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    unknown = set(values) - {"subject_id", "wrist", "scenario", "population",
                             "sample_rate_hz", "session_id"}
    if unknown:
        raise DataError(f"unknown metadata keys: {sorted(unknown)}")
    missing = {"subject_id", "wrist", "scenario"} - set(values)
    if missing:
        raise DataError(f"missing metadata keys: {sorted(missing)}")
    try:
        rate = float(values.get("sample_rate_hz", DEFAULT_SAMPLE_RATE))
    except ValueError:
        raise DataError(f"bad sample_rate_hz {values['sample_rate_hz']!r}") from None
    return RecordingMeta(
        subject_id=values["subject_id"],
        wrist=values["wrist"],
        scenario=values["scenario"],
        population=values.get("population", "healthy"),
        sample_rate=rate,
        session_id=values.get("session_id", ""),
    )


def format_meta(meta: RecordingMeta) -> str:
    lines = [
        f"subject_id={meta.subject_id}",
        f"wrist={meta.wrist}",
        f"scenario={meta.scenario}",
        f"population={meta.population}",
        f"sample_rate_hz={meta.sample_rate:g}",
    ]
    if meta.session_id:
        lines.append(f"session_id={meta.session_id}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# recording CSV


def parse_recording(stream: IO[str] | str, meta: RecordingMeta | Mapping[str, str]) -> Recording:
    """Read a recording CSV.

    Timestamps must increase strictly and no gap may exceed 1.5 sample
    periods; after validation they are replaced by the implicit uniform grid
    anchored at the first timestamp.
    """
    if not isinstance(meta, RecordingMeta):
        meta = parse_meta("\n".join(f"{k}={v}" for k, v in meta.items()))
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    period = 1000.0 / meta.sample_rate
    limit = MAX_GAP_PERIODS * period
    reader = csv.reader(stream)
    rows: list[list[float]] = []
    t0 = prev_t = None
    for lineno, row in enumerate(reader, 1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if lineno == 1 and row[0].strip() == "t_ms":
            if tuple(c.strip() for c in row) != CSV_HEADER:
                raise MalformedRow(lineno, "unexpected header")
            continue
        if len(row) != len(CSV_HEADER):
            raise MalformedRow(lineno, f"expected {len(CSV_HEADER)} columns, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except ValueError:
            raise MalformedRow(lineno, "unparseable number") from None
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(lineno)
        t = vals[0]
        if prev_t is None:
            t0 = t
        else:
            if t <= prev_t:
                raise NonMonotoneTimestamp(lineno)
            if t - prev_t > limit:
                raise TimestampGap(lineno, t - prev_t, limit)
        prev_t = t
        rows.append(vals[1:])
    if not rows:
        raise EmptyStream("recording stream has no samples")
    return Recording.from_meta(np.array(rows), meta, start_time=t0)


def _fmt_ms(t: float) -> str:
    s = f"{t:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def write_recording(rec: Recording, stream: IO[str]) -> None:
    stream.write(",".join(CSV_HEADER) + "\n")
    times = rec.times_ms()
    for t, row in zip(times, rec.samples):
        stream.write(_fmt_ms(t) + "," + ",".join(f"{v:.6f}" for v in row) + "\n")


def serialize_recording(rec: Recording) -> str:
    buf = io.StringIO()
    write_recording(rec, buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# label CSV


def ms_to_index(t_ms: float, sample_rate: float) -> int:
    """Nearest sample index; exact ties go to the earlier sample."""
    x = t_ms * sample_rate / 1000.0
    return int(math.ceil(x - 0.5))


def parse_labels(
    stream: IO[str] | str, sample_rate: float = DEFAULT_SAMPLE_RATE
) -> LabelTrack:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    raw: list[tuple[float, float, MovementClass, int]] = []
    for lineno, row in enumerate(csv.reader(stream), 1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if lineno == 1 and row[0].strip() == "start_ms":
            continue
        if len(row) != 3:
            raise MalformedRow(lineno, f"expected 3 columns, got {len(row)}")
        try:
            s, e = float(row[0]), float(row[1])
        except ValueError:
            raise MalformedRow(lineno, "unparseable time") from None
        if not (math.isfinite(s) and math.isfinite(e)):
            raise NonFiniteValue(lineno)
        c = MovementClass.parse(row[2])
        if e <= s:
            raise InvalidInterval(f"line {lineno}: end {e:g} <= start {s:g}")
        if s < 0:
            raise InvalidInterval(f"line {lineno}: negative start {s:g}")
        raw.append((s, e, c, lineno))
    raw.sort(key=lambda r: (r[0], r[1]))
    for a, b in zip(raw, raw[1:]):
        if b[0] < a[1]:
            raise OverlappingIntervals(f"lines {a[3]} and {b[3]} overlap")
    out = []
    for s, e, c, lineno in raw:
        si, ei = ms_to_index(s, sample_rate), ms_to_index(e, sample_rate)
        if ei <= si:
            raise InvalidInterval(f"line {lineno}: interval shorter than one sample")
        out.append((si, ei, c))
    return LabelTrack.from_intervals(out)


def write_labels(track: LabelTrack, stream: IO[str], sample_rate: float = DEFAULT_SAMPLE_RATE) -> None:
    period = 1000.0 / sample_rate
    stream.write("start_ms,end_ms,class\n")
    for s, e, c in track:
        stream.write(f"{_fmt_ms(s * period)},{_fmt_ms(e * period)},{c.value}\n")


def serialize_labels(track: LabelTrack, sample_rate: float = DEFAULT_SAMPLE_RATE) -> str:
    buf = io.StringIO()
    write_labels(track, buf, sample_rate)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# alignment and slicing


def align_session(
    left: Recording,
    right: Recording,
    labels_left: LabelTrack | None = None,
    labels_right: LabelTrack | None = None,
    session_id: str = "",
) -> Session:
    """Trim the earlier-starting recording so both start together.

    Both recordings are then cut to the shorter common length and the label
    tracks are shifted and clipped to match.
    """
    labels_left = labels_left or LabelTrack()
    labels_right = labels_right or LabelTrack()
    if left.wrist != "left" or right.wrist != "right":
        raise SessionMismatch("expected a left and a right recording")
    _check_pair(left, right)
    skew = right.start_time - left.start_time
    if abs(skew) >= MAX_ALIGN_SKEW_MS:
        raise UnsynchronizedPair(f"start-time skew {skew:g} ms is not below 1 s")
    period = left.period_ms
    k = int(round(abs(skew) / period))
    trim_l, trim_r = (k, 0) if skew > 0 else (0, k)
    n = min(left.n_samples - trim_l, right.n_samples - trim_r)
    if n < 1:
        raise UnsynchronizedPair("recordings do not overlap in time")

    def cut(rec: Recording, trim: int, track: LabelTrack):
        if trim == 0 and n == rec.n_samples:
            return rec, track
        rec = rec.with_samples(
            rec.samples[trim : trim + n], start_time=rec.start_time + trim * period
        )
        return rec, track.shifted(-trim, n)

    left, labels_left = cut(left, trim_l, labels_left)
    right, labels_right = cut(right, trim_r, labels_right)
    return Session(left, right, labels_left, labels_right, session_id or left.session_id)


def slice_recording(recording: Recording, segment: Segment) -> np.ndarray:
    if segment.end > recording.n_samples:
        raise SegmentOutOfRange(
            f"segment [{segment.start}, {segment.end}) exceeds {recording.n_samples} samples"
        )
    return recording.samples[segment.start : segment.end]
