"""Pipeline configuration file: ``section.key = value`` lines.

A ``[section]`` header applies its name to the undotted keys that follow.
Blank lines and ``#`` comments are ignored.  Every key must name a field of
the section's config type; values are coerced by that field's annotation.
"""

from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .cnn import CnnConfig, TrainConfig
from .data_model import CHANNEL_NAMES
from .errors import ConfigError
from .evaluate import CLASSIFIERS, CNN_SPLIT, SVM_SPLIT, ClassifierConfigs, DatasetConfig, TableConfig, sub_seed
from .preprocess import DriftConfig, FusionConfig
from .segment import RestConfig, SpotConfig, WindowConfig
from .svm import SvmConfig
from .synth import ProtocolConfig


@dataclass(frozen=True)
class FeatureSection:
    channels: tuple[str, ...] = CHANNEL_NAMES


@dataclass(frozen=True)
class FusionSection:
    enabled: bool = False
    correction_gain: float = 0.1
    gravity_magnitude: float = 9.81
    use_magnetometer: bool = True

    def build(self) -> FusionConfig | None:
        if not self.enabled:
            return None
        return FusionConfig(self.correction_gain, self.gravity_magnitude, self.use_magnetometer)


@dataclass(frozen=True)
class SplitSection:
    unit: str = "segment"
    svm_ratios: tuple[float, float, float] = SVM_SPLIT
    cnn_ratios: tuple[float, float, float] = CNN_SPLIT

    def __post_init__(self):
        if self.unit not in ("segment", "session"):
            raise ConfigError("split unit must be segment or session")
        for r in (self.svm_ratios, self.cnn_ratios):
            if len(r) != 3 or abs(sum(r) - 1.0) > 1e-9 or min(r) < 0 or not r[2] > 0:
                raise ConfigError(f"split ratios {r} must be three shares summing to 1")
        if not self.cnn_ratios[1] > 0:
            raise ConfigError("the CNN split needs a validation share")


@dataclass(frozen=True)
class SynthSection:
    n_subjects: int = 25
    l2_sessions: int = 3
    n_patients: int = 0
    patient_scale: float = 0.4
    n_target: int = 8
    n_nontarget: int = 8
    rest_s: float = 5.0
    noise_std: float = 0.05
    drift_rate: float = 0.01
    jitter: float = 1.0
    sample_rate: float = 100.0

    def __post_init__(self):
        if self.n_subjects < 1 or self.l2_sessions < 0 or self.n_patients < 0:
            raise ConfigError("synth counts must be non-negative (n_subjects >= 1)")

    def template(self, seed: int) -> ProtocolConfig:
        return ProtocolConfig(rest_s=self.rest_s, n_target=self.n_target,
                              n_nontarget=self.n_nontarget, noise_std=self.noise_std,
                              drift_rate=self.drift_rate, seed=seed,
                              sample_rate=self.sample_rate, jitter=self.jitter)


@dataclass(frozen=True)
class EvalSection:
    overlap_threshold: float = 0.5
    action_length_s: float | None = None
    classifiers: tuple[str, ...] = CLASSIFIERS
    patient_cnn: bool = False
    train_population: str = "same"

    def __post_init__(self):
        if not self.classifiers or set(self.classifiers) - set(CLASSIFIERS):
            raise ConfigError(f"classifiers must be drawn from {CLASSIFIERS}")
        if self.train_population not in ("same", "healthy"):
            raise ConfigError("train_population must be 'same' or 'healthy'")


@dataclass(frozen=True)
class PathSection:
    data: str = ""
    out: str = ""


# CNN shape fields follow from the data; the seed comes from the global seed
_CNN_DERIVED = {"channels", "time_points", "classes", "seed"}

SECTIONS: dict[str, type] = {
    "drift": DriftConfig,
    "fusion": FusionSection,
    "rest": RestConfig,
    "window": WindowConfig,
    "spot": SpotConfig,
    "features": FeatureSection,
    "svm": SvmConfig,
    "cnn": CnnConfig,
    "train": TrainConfig,
    "split": SplitSection,
    "synth": SynthSection,
    "eval": EvalSection,
    "paths": PathSection,
}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    drift: DriftConfig = DriftConfig()
    fusion: FusionSection = FusionSection()
    rest: RestConfig = RestConfig()
    window: WindowConfig = WindowConfig()
    spot: SpotConfig = SpotConfig()
    features: FeatureSection = FeatureSection()
    svm: SvmConfig = SvmConfig()
    cnn: CnnConfig = CnnConfig()
    train: TrainConfig = TrainConfig()
    split: SplitSection = SplitSection()
    synth: SynthSection = SynthSection()
    eval: EvalSection = EvalSection()
    paths: PathSection = field(default_factory=PathSection)

    def dataset_config(self) -> DatasetConfig:
        return DatasetConfig(
            drift=self.drift, fusion=self.fusion.build(), rest=self.rest, window=self.window,
            spot=self.spot, channels=self.features.channels,
            overlap_threshold=self.eval.overlap_threshold,
            action_length_s=self.eval.action_length_s,
        )

    def table_config(self) -> TableConfig:
        return TableConfig(
            dataset=self.dataset_config(),
            classifiers=ClassifierConfigs(self.svm, self.cnn, self.train),
            seed=self.seed,
            split_unit=self.split.unit,
            svm_ratios=self.split.svm_ratios,
            cnn_ratios=self.split.cnn_ratios,
            cells_classifiers=self.eval.classifiers,
            patient_cnn=self.eval.patient_cnn,
            train_population=self.eval.train_population,
        )

    def protocol_template(self) -> ProtocolConfig:
        return self.synth.template(sub_seed(self.seed, "synth"))


def _coerce(text: str, hint: Any, line: int, key: str):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType):
        if type(None) in args and text.lower() in ("none", ""):
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(text, inner[0], line, key)
    if origin is tuple:
        items = [s.strip() for s in text.split(",") if s.strip()]
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(s, args[0], line, key) for s in items)
        if len(items) != len(args):
            raise ConfigError(f"{key} expects {len(args)} comma-separated values", line)
        return tuple(_coerce(s, a, line, key) for s, a in zip(items, args))
    if hint is bool:
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}", line)
    try:
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {hint.__name__}, got {text!r}", line) from None
    if hint is str:
        return text
    raise ConfigError(f"{key}: unsupported field type {hint}", line)


def parse_config(text: str) -> PipelineConfig:
    """Parse config text; any problem raises a line-anchored :class:`ConfigError`."""
    overrides: dict[str, dict[str, Any]] = {}
    first_line: dict[str, int] = {}
    seed = PipelineConfig.seed
    section = None
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected key = value", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key and section is not None and key != "seed":
            key = f"{section}.{key}"
        if key in seen:
            raise ConfigError(f"duplicate key {key} (first on line {seen[key]})", lineno)
        seen[key] = lineno
        if key == "seed":
            seed = _coerce(value, int, lineno, key)
            continue
        sec, _, name = key.partition(".")
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section {sec!r}", lineno)
        cls = SECTIONS[sec]
        hints = typing.get_type_hints(cls)
        names = {f.name for f in dataclasses.fields(cls)}
        if name not in names or (sec == "cnn" and name in _CNN_DERIVED):
            raise ConfigError(f"unknown key {key}", lineno)
        overrides.setdefault(sec, {})[name] = _coerce(value, hints[name], lineno, key)
        first_line.setdefault(sec, lineno)

    base = PipelineConfig()
    built = {}
    for sec, kw in overrides.items():
        try:
            built[sec] = replace(getattr(base, sec), **kw)
        except ConfigError as exc:
            raise ConfigError(str(exc), first_line[sec]) from None
    return replace(base, seed=seed, **built)


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def format_config(cfg: PipelineConfig) -> str:
    """Render every setting in the parseable form (round-trips through parse_config)."""

    def fmt(v) -> str:
        if v is None:
            return "none"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, tuple):
            return ",".join(fmt(x) for x in v)
        if isinstance(v, float):
            return repr(float(v))
        return str(v)

    lines = [f"seed = {cfg.seed}"]
    for sec in SECTIONS:
        obj = getattr(cfg, sec)
        for f in dataclasses.fields(obj):
            if sec == "cnn" and f.name in _CNN_DERIVED:
                continue
            lines.append(f"{sec}.{f.name} = {fmt(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"
