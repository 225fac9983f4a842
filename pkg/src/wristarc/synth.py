"""Synthetic dual-wrist sessions with exact ground truth.

Target movements are single smooth acceleration pulses ``16 s^2 (1 - s)^2``
(zero value and slope at both ends, one peak at mid-duration) along a
class-specific direction, with a matching out-and-back rotation.  Non-target
movements are longer multi-lobe templates.  Pulse lengths are always an odd
number of samples, so each pulse has a unique peak sample at its centre.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data_model import (
    ACC,
    ATT,
    GYR,
    MAG,
    NONTARGET_CLASSES,
    TARGET_CLASSES,
    LabelTrack,
    MovementClass,
    Recording,
    Session,
)
from .corpus import session_files as corpus_files
from .errors import ConfigError

EARTH_FIELD_UT = np.array([22.0, 0.0, -42.0])
SESSION_EPOCH_MS = 1_600_000_000_000.0
LEAD_IN_S = 2.0


def bell(n: int) -> np.ndarray:
    """``16 s^2 (1 - s)^2`` sampled at ``n`` evenly spaced points of ``[0, 1]``."""
    if n == 1:
        return np.ones(1)
    s = np.linspace(0.0, 1.0, n)
    return 16.0 * s**2 * (1.0 - s) ** 2


def swing(n: int) -> np.ndarray:
    """Out-and-back angular-rate profile; integrates to zero over the pulse."""
    if n == 1:
        return np.zeros(1)
    s = np.linspace(0.0, 1.0, n)
    return np.sin(2.0 * np.pi * s) * 4.0 * s * (1.0 - s)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class MovementModel:
    cls: MovementClass
    duration_s: tuple[float, float]
    peak_accel: tuple[float, float]
    direction: np.ndarray
    rotation_axis: np.ndarray
    peak_rate: float = 1.5

    def __post_init__(self):
        if not (0 < self.duration_s[0] <= self.duration_s[1]):
            raise ConfigError("duration range must be positive and ordered")
        if not (0 < self.peak_accel[0] <= self.peak_accel[1]):
            raise ConfigError("peak acceleration range must be positive and ordered")
        object.__setattr__(self, "direction", _unit(self.direction))
        object.__setattr__(self, "rotation_axis", _unit(self.rotation_axis))


# canonical per-class templates; directions are body-frame unit vectors
CANONICAL_MODELS: dict[MovementClass, MovementModel] = {
    MovementClass.M1: MovementModel(MovementClass.M1, (2.4, 3.4), (2.0, 3.0), [0.2, 0.0, 1.0], [0, 1, 0], 1.5),
    MovementClass.M2: MovementModel(MovementClass.M2, (2.4, 3.4), (2.0, 3.0), [0.0, 1.0, 0.2], [1, 0, 0], 1.5),
    MovementClass.M3: MovementModel(MovementClass.M3, (2.0, 3.0), (1.5, 2.5), [1.0, 0.0, 0.0], [0, 0, 1], 2.0),
    MovementClass.M4: MovementModel(MovementClass.M4, (1.8, 2.6), (1.5, 2.5), [-0.6, 0.6, 0.5], [1, 1, 0], 2.5),
}


def nontarget_template(cls: MovementClass) -> list[tuple[np.ndarray, float]]:
    """Lobe directions and relative amplitudes of a non-target template."""
    j = NONTARGET_CLASSES.index(cls)
    rng = np.random.default_rng([7919, j])
    lobes = 2 + j % 3
    return [(_unit(rng.normal(size=3)), float(rng.uniform(0.4, 1.0))) for _ in range(lobes)]


@dataclass(frozen=True)
class ProtocolConfig:
    scenario: str = "L1"
    rest_s: float = 5.0
    # L1: target classes performed in order; L2: pool the targets are drawn from
    classes: tuple[MovementClass, ...] = TARGET_CLASSES
    n_target: int = 8
    n_nontarget: int = 8
    noise_std: float = 0.05
    drift_rate: float = 0.01
    seed: int = 0
    sample_rate: float = 100.0
    # scales all duration/amplitude/direction variation; 0 makes every pulse of a class identical
    jitter: float = 1.0
    dominant: str = "right"
    population: str = "healthy"
    # amplitude factor on the affected (non-dominant) wrist for patients
    hemiparesis_scale: float = 1.0
    subject_id: str = "S00"
    session_id: str = ""

    def __post_init__(self):
        if self.scenario not in ("L1", "L2"):
            raise ConfigError(f"scenario must be L1 or L2, got {self.scenario!r}")
        if self.n_target < 0 or self.n_nontarget < 0:
            raise ConfigError("movement counts must be >= 0")
        if self.rest_s < 0:
            raise ConfigError("rest_s must be >= 0")
        if self.noise_std < 0 or self.jitter < 0:
            raise ConfigError("noise_std and jitter must be >= 0")
        if self.dominant not in ("left", "right"):
            raise ConfigError("dominant must be left or right")
        if not 0 < self.hemiparesis_scale <= 1:
            raise ConfigError("hemiparesis_scale must lie in (0, 1]")
        if any(not c.is_target for c in self.classes) or not self.classes:
            raise ConfigError("classes must be a non-empty set of target classes")


@dataclass(frozen=True)
class PlantedPulse:
    wrist: str
    start: int
    end: int
    peak: int
    cls: MovementClass
    event: int


@dataclass(frozen=True)
class PlantedEvent:
    cls: MovementClass
    wrists: tuple[str, ...]
    start: int
    end: int


@dataclass(eq=False)
class SynthSession:
    session: Session
    events: list[PlantedEvent]
    pulses: list[PlantedPulse]
    config: ProtocolConfig
    clean: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def pulses_for(self, wrist: str, targets_only: bool = False) -> list[PlantedPulse]:
        return [p for p in self.pulses
                if p.wrist == wrist and (p.cls.is_target or not targets_only)]


def _odd(n: float) -> int:
    n = max(1, int(round(n)))
    return n if n % 2 else n + 1


def _draw(rng, lo: float, hi: float, jitter: float) -> float:
    mid = 0.5 * (lo + hi)
    return mid + jitter * (rng.uniform() - 0.5) * (hi - lo)


def _render_target(model: MovementModel, rng, cfg: ProtocolConfig):
    """Acceleration and rotation-rate arrays, each ``(n, 3)``, for one target pulse."""
    n = _odd(_draw(rng, *model.duration_s, cfg.jitter) * cfg.sample_rate)
    amp = _draw(rng, *model.peak_accel, cfg.jitter)
    direction = _unit(model.direction + 0.08 * cfg.jitter * rng.normal(size=3))
    acc = amp * bell(n)[:, None] * direction[None, :]
    gyr = model.peak_rate * swing(n)[:, None] * model.rotation_axis[None, :]
    return acc, gyr


def _render_nontarget(cls: MovementClass, rng, cfg: ProtocolConfig):
    parts_acc, parts_gyr = [], []
    for direction, rel in nontarget_template(cls):
        n = _odd(_draw(rng, 0.8, 1.8, cfg.jitter) * cfg.sample_rate)
        amp = rel * _draw(rng, 1.0, 3.0, cfg.jitter)
        d = _unit(direction + 0.3 * cfg.jitter * rng.normal(size=3))
        parts_acc.append(amp * bell(n)[:, None] * d[None, :])
        parts_gyr.append(1.0 * swing(n)[:, None] * _unit(np.cross(d, [0.3, 0.5, 0.8]))[None, :])
    return np.vstack(parts_acc), np.vstack(parts_gyr)


def _rotation_matrices(att: np.ndarray) -> np.ndarray:
    """Body-to-world matrices for Z-Y-X Euler angles ``(n, 3)``."""
    yaw, pitch, roll = att[:, 0], att[:, 1], att[:, 2]
    cy, sy, cp, sp, cr, sr = np.cos(yaw), np.sin(yaw), np.cos(pitch), np.sin(pitch), np.cos(roll), np.sin(roll)
    R = np.empty((len(att), 3, 3))
    R[:, 0, 0] = cy * cp
    R[:, 0, 1] = cy * sp * sr - sy * cr
    R[:, 0, 2] = cy * sp * cr + sy * sr
    R[:, 1, 0] = sy * cp
    R[:, 1, 1] = sy * sp * sr + cy * cr
    R[:, 1, 2] = sy * sp * cr - cy * sr
    R[:, 2, 0] = -sp
    R[:, 2, 1] = cp * sr
    R[:, 2, 2] = cp * cr
    return R


def _plan(cfg: ProtocolConfig, rng) -> list[tuple[MovementClass, tuple[str, ...]]]:
    dom = cfg.dominant
    non = "left" if dom == "right" else "right"
    if cfg.scenario == "L1":
        return [(c, w) for c in cfg.classes for w in ((dom,), (non,), (dom, non))]
    targets = [cfg.classes[i] for i in rng.integers(0, len(cfg.classes), cfg.n_target)]
    others = [NONTARGET_CLASSES[i] for i in rng.integers(0, len(NONTARGET_CLASSES), cfg.n_nontarget)]
    items = targets + others
    order = rng.permutation(len(items))
    choices = ((dom,), (non,), (dom, non))
    return [(items[i], choices[rng.integers(0, 3)]) for i in order]


def synth_session(
    cfg: ProtocolConfig = ProtocolConfig(),
    models: dict[MovementClass, MovementModel] | None = None,
) -> SynthSession:
    """Generate one L1 or L2 session for both wrists.

    L1 performs each configured class with the dominant hand, the
    non-dominant hand and then both, separated by ``rest_s`` of stillness.
    L2 shuffles ``n_target`` target and ``n_nontarget`` non-target movements
    separated by short random pauses.
    """
    models = models or CANONICAL_MODELS
    rng = np.random.default_rng(cfg.seed)
    rate = cfg.sample_rate
    plan = _plan(cfg, rng)

    # lay out events on a shared timeline
    rendered = []
    t = int(round(max(LEAD_IN_S, cfg.rest_s if cfg.scenario == "L1" else 0.0) * rate))
    events: list[PlantedEvent] = []
    for cls, wrists in plan:
        per_wrist = {}
        for w in wrists:
            if cls.is_target:
                acc, gyr = _render_target(models[cls], rng, cfg)
            else:
                acc, gyr = _render_nontarget(cls, rng, cfg)
            per_wrist[w] = (acc, gyr)
        length = max(a.shape[0] for a, _ in per_wrist.values())
        rendered.append((t, cls, per_wrist))
        events.append(PlantedEvent(cls, tuple(sorted(wrists)), t, t + length))
        gap = cfg.rest_s if cfg.scenario == "L1" else rng.uniform(0.3, 1.5)
        t += length + int(round(gap * rate))
    n = t + int(round(LEAD_IN_S * rate))

    recordings, tracks, pulses, clean = {}, {}, [], {}
    start_time = SESSION_EPOCH_MS + 1000.0 * (cfg.seed % 1_000_000)
    for w_i, wrist in enumerate(("left", "right")):
        x = np.zeros((n, 12))
        intervals = []
        scale = cfg.hemiparesis_scale if (cfg.population == "patient" and wrist != cfg.dominant) else 1.0
        for ev, (t0, cls, per_wrist) in enumerate(rendered):
            if wrist not in per_wrist:
                continue
            acc, gyr = per_wrist[wrist]
            m = acc.shape[0]
            x[t0 : t0 + m, ACC] += scale * acc
            x[t0 : t0 + m, GYR] += scale * gyr
            peak = t0 + int(np.argmax(np.linalg.norm(acc, axis=1))) if cls.is_nontarget else t0 + (m - 1) // 2
            pulses.append(PlantedPulse(wrist, t0, t0 + m, peak, cls, ev))
            intervals.append((t0, t0 + m, cls))
        # fill the gaps with Rest so the track covers the whole recording
        full, prev = [], 0
        for s, e, c in intervals:
            if s > prev:
                full.append((prev, s, MovementClass.REST))
            full.append((s, e, c))
            prev = e
        if prev < n:
            full.append((prev, n, MovementClass.REST))
        tracks[wrist] = LabelTrack.from_intervals(full)

        # attitude: per-session baseline plus integrated rotation (small-angle)
        base = np.array([rng.uniform(-np.pi, np.pi), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)])
        excursion = np.cumsum(x[:, GYR][:, ::-1], axis=0) / rate  # (z, y, x) -> yaw, pitch, roll
        x[:, ATT] = base + excursion
        R = _rotation_matrices(x[:, ATT])
        x[:, MAG] = np.einsum("nji,j->ni", R, EARTH_FIELD_UT)
        clean[wrist] = x.copy()

        if cfg.noise_std > 0:
            x[:, ACC] += rng.normal(scale=cfg.noise_std, size=(n, 3))
        if cfg.drift_rate != 0:
            drift_dir = _unit(rng.normal(size=3))
            x[:, ACC] += cfg.drift_rate * (np.arange(n) / rate)[:, None] * drift_dir[None, :]
        recordings[wrist] = Recording(
            x, sample_rate=rate, start_time=start_time, wrist=wrist,
            subject_id=cfg.subject_id, scenario=cfg.scenario, population=cfg.population,
            session_id=cfg.session_id,
        )
    session = Session(recordings["left"], recordings["right"], tracks["left"], tracks["right"],
                      cfg.session_id)
    return SynthSession(session, events, sorted(pulses, key=lambda p: (p.wrist, p.start)), cfg, clean)


def subject_models(rng, jitter: float) -> dict[MovementClass, MovementModel]:
    """Per-subject style: scaled durations/amplitudes and tilted directions."""
    out = {}
    for cls, m in CANONICAL_MODELS.items():
        dur = 1.0 + 0.1 * jitter * rng.normal()
        amp = 1.0 + 0.15 * jitter * rng.normal()
        dur, amp = max(dur, 0.5), max(amp, 0.3)
        out[cls] = replace(
            m,
            duration_s=(m.duration_s[0] * dur, m.duration_s[1] * dur),
            peak_accel=(m.peak_accel[0] * amp, m.peak_accel[1] * amp),
            direction=_unit(m.direction + 0.15 * jitter * rng.normal(size=3)),
        )
    return out


def synth_corpus(
    n_subjects: int = 25,
    template: ProtocolConfig = ProtocolConfig(),
    l2_sessions: int = 3,
    n_patients: int = 0,
    patient_scale: float = 0.4,
) -> list[SynthSession]:
    """Per subject: one L1 session per target class, then ``l2_sessions`` L2 sessions.

    Subjects ``S01..`` are healthy; ``P01..`` patients (if any) perform with
    the non-dominant wrist scaled by ``patient_scale``.
    """
    if n_subjects < 1:
        raise ConfigError("n_subjects must be >= 1")
    out = []
    people = [(f"S{i + 1:02d}", "healthy", i) for i in range(n_subjects)]
    people += [(f"P{i + 1:02d}", "patient", n_subjects + i) for i in range(n_patients)]
    for subject, population, idx in people:
        ss = np.random.SeedSequence([template.seed, idx])
        rng = np.random.default_rng(ss)
        models = subject_models(rng, template.jitter)
        dominant = "right" if rng.uniform() < 0.9 else "left"
        base = replace(
            template, subject_id=subject, population=population, dominant=dominant,
            hemiparesis_scale=patient_scale if population == "patient" else 1.0,
        )
        seeds = rng.integers(0, 2**31 - 1, size=len(TARGET_CLASSES) + l2_sessions)
        for k, cls in enumerate(TARGET_CLASSES):
            cfg = replace(base, scenario="L1", classes=(cls,), seed=int(seeds[k]),
                          session_id=f"{subject}_L1_{cls.value}")
            out.append(synth_session(cfg, models))
        for k in range(l2_sessions):
            cfg = replace(base, scenario="L2", classes=TARGET_CLASSES,
                          seed=int(seeds[len(TARGET_CLASSES) + k]),
                          session_id=f"{subject}_L2_{k + 1}")
            out.append(synth_session(cfg, models))
    return out


# ---------------------------------------------------------------------------
# on-disk corpus


def session_files(ss: SynthSession) -> dict[str, str]:
    """Relative path -> file contents for one session, including ``planted.csv``."""
    s = ss.session
    files = corpus_files(s)
    buf = io.StringIO()
    buf.write("wrist,start_index,end_index,peak_index,class,event\n")
    for p in ss.pulses:
        buf.write(f"{p.wrist},{p.start},{p.end},{p.peak},{p.cls.value},{p.event}\n")
    files[f"{s.subject_id}/{s.session_id}/planted.csv"] = buf.getvalue()
    return files


def write_corpus(sessions: Sequence[SynthSession], out_dir: str | Path) -> Path:
    """Write every session plus ``manifest.csv`` (path, seed, sha256)."""
    out = Path(out_dir)
    rows = []
    for ss in sessions:
        for rel, text in session_files(ss).items():
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            data = text.encode("utf-8")
            path.write_bytes(data)
            rows.append((rel, ss.session.subject_id, ss.session.session_id, ss.config.scenario,
                         ss.config.population, ss.config.seed, hashlib.sha256(data).hexdigest()))
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "subject_id", "session_id", "scenario", "population", "seed", "sha256"])
        w.writerows(sorted(rows))
    return manifest
