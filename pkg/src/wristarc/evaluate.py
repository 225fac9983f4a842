"""Dataset assembly, splits, per-cell training/evaluation and the accuracy table."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import logging
import math
from pathlib import Path
from dataclasses import dataclass, field, replace
from typing import Callable, IO, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import cnn as cnn_mod
from .cnn import CnnConfig, TrainConfig
from .data_model import (
    CHANNEL_NAMES,
    LabelTrack,
    MovementClass,
    Recording,
    Segment,
    Session,
    channel_indices,
    sort_classes,
)
from .errors import ConfigError, DataError
from .features import feature_matrix, feature_names, fit_scaler, read_feature_table, write_feature_table
from .preprocess import DriftConfig, FusionConfig, fuse_attitude, remove_drift
from .segment import (
    RestConfig,
    SpotConfig,
    WindowConfig,
    peak_signal,
    segment_by_rest,
    sliding_windows,
    spot_gesture,
)
from .svm import SvmConfig, train_svm

log = logging.getLogger(__name__)

SEGMENTATIONS = ("action", "spotting")
CLASSIFIERS = ("svm", "cnn")


def sub_seed(seed: int, *names) -> int:
    """Stable 31-bit seed derived from a global seed and stage names."""
    key = ":".join([str(seed)] + [str(n) for n in names]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:4], "little") & 0x7FFFFFFF


class Provenance(NamedTuple):
    subject_id: str
    session_id: str
    wrist: str
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.subject_id}/{self.session_id}/{self.wrist}/{self.start}-{self.end}"


@dataclass(frozen=True)
class DatasetConfig:
    drift: DriftConfig = DriftConfig()
    fusion: FusionConfig | None = None
    rest: RestConfig = RestConfig()
    window: WindowConfig = WindowConfig()
    spot: SpotConfig = SpotConfig()
    channels: tuple[str, ...] = CHANNEL_NAMES
    overlap_threshold: float = 0.5
    # fixed CNN input length for rest-bounded L1 segments; None uses window.window_s
    action_length_s: float | None = None

    def __post_init__(self):
        if not 0 < self.overlap_threshold <= 1:
            raise ConfigError("overlap_threshold must lie in (0, 1]")
        channel_indices(self.channels)


@dataclass(eq=False)
class LabeledDataset:
    X: np.ndarray  # (n, d) features or (n, C, T) windows
    labels: list[MovementClass]
    provenance: list[Provenance]
    scenario: str
    segmentation: str
    population: str
    kind: str  # "features" or "windows"
    channels: tuple[str, ...] = CHANNEL_NAMES

    def __post_init__(self):
        if len(self.X) != len(self.labels) or len(self.labels) != len(self.provenance):
            raise DataError("dataset arrays differ in length")
        allowed = {c for c in MovementClass if c.is_target} | {MovementClass.NULL}
        if not set(self.labels) <= allowed:
            raise DataError("dataset labels must be target classes or Null")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> list[MovementClass]:
        return sort_classes(self.labels)

    def subset(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = list(idx)
        X = self.X[idx] if len(idx) else self.X[:0]
        return replace(self, X=X, labels=[self.labels[i] for i in idx],
                       provenance=[self.provenance[i] for i in idx])

    def counts(self) -> dict[MovementClass, int]:
        out: dict[MovementClass, int] = {}
        for c in self.labels:
            out[c] = out.get(c, 0) + 1
        return out


def label_segment(track: LabelTrack, seg: Segment, scenario: str,
                  threshold: float = 0.5) -> MovementClass | None:
    """Majority-overlap label: a target needs ``threshold`` of the segment.

    Anything else becomes Null in L2 and is dropped (``None``) in L1.
    """
    overlaps = track.overlaps(seg.start, seg.end)
    if overlaps:
        best = max(overlaps.items(), key=lambda kv: (kv[1], -kv[0].order))
        if best[0].is_target and best[1] / len(seg) >= threshold:
            return best[0]
    return MovementClass.NULL if scenario == "L2" else None


def fixed_window(n_samples: int, seg: Segment, length: int) -> tuple[int, int]:
    """``length`` samples centred on the segment, shifted to stay inside the recording."""
    if length > n_samples:
        raise DataError(f"recording of {n_samples} samples is shorter than window {length}")
    centre = (seg.start + seg.end - 1) // 2
    start = centre - (length - 1) // 2
    start = min(max(start, 0), n_samples - length)
    return start, start + length


def prepare_recording(rec: Recording, cfg: DatasetConfig) -> Recording:
    """Drift removal, then fusion when configured (fixed pipeline order)."""
    rec = remove_drift(rec, cfg.drift)
    if cfg.fusion is not None:
        rec = fuse_attitude(rec, cfg.fusion)
    return rec


def candidate_segments(rec: Recording, scenario: str, segmentation: str,
                       cfg: DatasetConfig) -> list[Segment]:
    if scenario == "L1":
        segs = segment_by_rest(rec, cfg.rest)
    else:
        segs = sliding_windows(rec, cfg.window)
    if segmentation == "spotting":
        sig = peak_signal(rec, cfg.spot)
        segs = [spot_gesture(rec, s, cfg.spot, signal=sig) for s in segs]
    return segs


def window_length(scenario: str, segmentation: str, cfg: DatasetConfig, rate: float) -> int:
    if segmentation == "spotting":
        return cfg.spot.length(rate)
    seconds = cfg.window.window_s if (scenario == "L2" or cfg.action_length_s is None) \
        else cfg.action_length_s
    return int(round(seconds * rate))


def build_dataset(
    sessions: Iterable[Session],
    scenario: str,
    segmentation: str,
    cfg: DatasetConfig = DatasetConfig(),
    kind: str = "features",
    population: str | None = None,
    prepared: bool = False,
) -> LabeledDataset:
    """Segment, label and featurise every wrist of the matching sessions.

    ``kind="features"`` yields 4-statistic feature rows; ``kind="windows"``
    yields ``(C, T)`` raw windows of one fixed length per variant.  Set
    ``prepared`` when the recordings have already been through
    :func:`prepare_recording`.
    """
    if scenario not in ("L1", "L2") or segmentation not in SEGMENTATIONS:
        raise ConfigError(f"bad cell {scenario}/{segmentation}")
    if kind not in ("features", "windows"):
        raise ConfigError(f"kind must be features or windows, got {kind!r}")
    sessions = [s for s in sessions if s.scenario == scenario
                and (population is None or s.population == population)]
    if not sessions:
        raise DataError(f"no {scenario} sessions" + (f" for {population}" if population else ""))
    cols = channel_indices(cfg.channels)
    rows, labels, prov = [], [], []
    pops = set()
    for sess in sessions:
        pops.add(sess.population)
        for raw, track in sess.wrists():
            if track is None:
                raise DataError("session without label track")
            rec = raw if prepared else prepare_recording(raw, cfg)
            length = window_length(scenario, segmentation, cfg, rec.sample_rate)
            for seg in candidate_segments(rec, scenario, segmentation, cfg):
                lab = label_segment(track, seg, scenario, cfg.overlap_threshold)
                if lab is None:
                    continue
                if kind == "features":
                    rows.append(rec.samples[seg.start : seg.end, cols])
                else:
                    s, e = fixed_window(rec.n_samples, seg, length)
                    rows.append(rec.samples[s:e, cols].T)
                labels.append(lab)
                prov.append(Provenance(sess.subject_id, sess.session_id or raw.session_id,
                                       raw.wrist, seg.start, seg.end))
    if kind == "features":
        X = feature_matrix(rows) if rows else np.zeros((0, 4 * len(cols)))
    else:
        X = np.stack(rows) if rows else np.zeros((0, len(cols), 0))
    pop = population or (pops.pop() if len(pops) == 1 else "mixed")
    return LabeledDataset(X, labels, prov, scenario, segmentation, pop, kind, tuple(cfg.channels))


def parse_provenance(text: str) -> Provenance:
    try:
        subject, session, wrist, span = text.split("/")
        start, end = (int(v) for v in span.split("-"))
    except ValueError:
        raise DataError(f"bad provenance {text!r}") from None
    return Provenance(subject, session, wrist, start, end)


def save_dataset(ds: LabeledDataset, prefix: str | Path) -> list[Path]:
    """Write ``prefix.meta`` and ``prefix.csv`` (plus ``prefix.npy`` for windows)."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    meta = prefix.with_suffix(".meta")
    meta.write_text(f"kind={ds.kind}\nscenario={ds.scenario}\n"
                    f"segmentation={ds.segmentation}\npopulation={ds.population}\n"
                    f"channels={','.join(ds.channels)}\n")
    table = prefix.with_suffix(".csv")
    sources = [str(p) for p in ds.provenance]
    paths = [meta, table]
    with table.open("w", newline="") as fh:
        if ds.kind == "features":
            names = feature_names(ds.channels)
            write_feature_table(ds.X, ds.labels, fh, names, sources)
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "source"])
            w.writerows(zip([c.value for c in ds.labels], sources))
    if ds.kind == "windows":
        npy = prefix.with_suffix(".npy")
        with npy.open("wb") as fh:
            np.save(fh, np.ascontiguousarray(ds.X, dtype="<f8"), allow_pickle=False)
        paths.append(npy)
    return paths


def load_dataset(prefix: str | Path) -> LabeledDataset:
    prefix = Path(prefix)
    for suffix in (".meta", ".csv"):
        if not prefix.with_suffix(suffix).exists():
            raise DataError(f"dataset file {prefix.with_suffix(suffix)} not found")
    meta = {}
    for line in prefix.with_suffix(".meta").read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            meta[k.strip()] = v.strip()
    try:
        kind = meta["kind"]
        scenario, segmentation, population = meta["scenario"], meta["segmentation"], meta["population"]
    except KeyError as exc:
        raise DataError(f"dataset metadata lacks {exc.args[0]}") from None
    with prefix.with_suffix(".csv").open(newline="") as fh:
        if kind == "features":
            X, labels, _, sources = read_feature_table(fh)
        else:
            rows = list(csv.reader(fh))[1:]
            labels = [MovementClass.parse(r[0]) for r in rows]
            sources = [r[1] for r in rows]
            npy = prefix.with_suffix(".npy")
            if not npy.exists():
                raise DataError(f"window file {npy} not found")
            X = np.load(npy, allow_pickle=False)
            if len(X) != len(labels):
                raise DataError("window file and label table differ in length")
    if any(l is None for l in labels):
        raise DataError("dataset rows need labels")
    channels = tuple(meta.get("channels", ",".join(CHANNEL_NAMES)).split(","))
    return LabeledDataset(X, labels, [parse_provenance(s) for s in sources],
                          scenario, segmentation, population, kind, channels)


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    unit: str = "segment"

    def __post_init__(self):
        if any(r < 0 for r in self.ratios) or not self.ratios[2] > 0:
            raise ConfigError("split ratios must be >= 0 with a positive test share")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(self.ratios)}")
        if self.unit not in ("segment", "session"):
            raise ConfigError("split unit must be segment or session")


SVM_SPLIT = (0.8, 0.0, 0.2)
CNN_SPLIT = (0.6, 0.2, 0.2)


def split(ds: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """Deterministic (train, val, test) partition.

    ``unit="segment"`` stratifies by class with floor shares for val/test and
    the remainder in train.  ``unit="session"`` keeps each session's items
    together, assigning shuffled sessions to whichever split is furthest
    below its target share.
    """
    if len(ds) == 0:
        raise DataError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)
    _, r_val, r_test = spec.ratios
    parts: list[list[int]] = [[], [], []]
    if spec.unit == "segment":
        by_class: dict[MovementClass, list[int]] = {}
        for i, c in enumerate(ds.labels):
            by_class.setdefault(c, []).append(i)
        for cls in sort_classes(by_class):
            idx = [by_class[cls][j] for j in rng.permutation(len(by_class[cls]))]
            n = len(idx)
            n_test = math.floor(n * r_test + 1e-9)
            n_val = math.floor(n * r_val + 1e-9)
            if n_test == 0 or (r_val > 0 and n_val == 0):
                log.warning("class %s has %d items, too few for every split part", cls.value, n)
                if n_test == 0 and n >= 2:
                    n_test = 1
            parts[2] += idx[:n_test]
            parts[1] += idx[n_test : n_test + n_val]
            parts[0] += idx[n_test + n_val :]
    else:
        groups: dict[tuple[str, str], list[int]] = {}
        for i, p in enumerate(ds.provenance):
            groups.setdefault((p.subject_id, p.session_id), []).append(i)
        keys = sorted(groups)
        keys = [keys[j] for j in rng.permutation(len(keys))]
        targets = np.array(spec.ratios) * len(ds)
        sizes = np.zeros(3)
        for key in keys:
            k = int(np.argmax(targets - sizes))
            parts[k] += groups[key]
            sizes[k] += len(groups[key])
    if not parts[2]:
        raise DataError("split left the test set empty")
    return tuple(ds.subset(sorted(p)) for p in parts)


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class ClassifierConfigs:
    svm: SvmConfig = SvmConfig()
    cnn: CnnConfig = CnnConfig()
    train: TrainConfig = TrainConfig()


@dataclass(eq=False)
class CellResult:
    accuracy: float
    confusion: np.ndarray
    classes: list[MovementClass]
    n_test: int


def confusion_matrix(y_true: Sequence[MovementClass], y_pred: Sequence[MovementClass],
                     classes: Sequence[MovementClass]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[index[t], index[p]] += 1
    return cm


def score(y_true, y_pred, classes=None) -> CellResult:
    classes = list(classes) if classes is not None else sort_classes(list(y_true) + list(y_pred))
    cm = confusion_matrix(y_true, y_pred, classes)
    total = int(cm.sum())
    acc = float(np.trace(cm) / total) if total else float("nan")
    return CellResult(acc, cm, classes, total)


def fit_classifier(train_ds: LabeledDataset, val_ds: LabeledDataset | None, classifier: str,
                   configs: ClassifierConfigs):
    """Train on ``train_ds`` (validation only used by the CNN); returns a predict function."""
    if classifier == "svm":
        if train_ds.kind != "features":
            raise ConfigError("the SVM needs a feature dataset")
        scaler = fit_scaler(train_ds.X)
        model = train_svm((scaler.transform(train_ds.X), train_ds.labels), configs.svm, scaler)
        return model, model.predict
    if classifier == "cnn":
        if train_ds.kind != "windows":
            raise ConfigError("the CNN needs a window dataset")
        if val_ds is None or len(val_ds) == 0:
            raise DataError("CNN training needs a non-empty validation split")
        classes = train_ds.classes
        c, t = train_ds.X.shape[1:]
        cfg = replace(configs.cnn, channels=c, time_points=t, classes=len(classes))
        model = cnn_mod.train_cnn((train_ds.X, train_ds.labels), (val_ds.X, val_ds.labels),
                                  cfg, configs.train, classes)
        return model, lambda X: cnn_mod.predict(model, X)
    raise ConfigError(f"unknown classifier {classifier!r}")


def _restrict(ds: LabeledDataset, classes: Sequence[MovementClass]) -> LabeledDataset:
    keep = [i for i, c in enumerate(ds.labels) if c in classes]
    return ds.subset(keep)


def run_cell(
    ds: LabeledDataset,
    classifier: str,
    spec: SplitSpec | None = None,
    configs: ClassifierConfigs = ClassifierConfigs(),
    train_ds: LabeledDataset | None = None,
):
    """Train and test one table cell; returns ``(CellResult, model)``.

    The default split is 80/0/20 for the SVM and 60/20/20 for the CNN.  With
    ``train_ds`` given (e.g. healthy data for patient cells) the model is
    trained on that dataset's train/val parts and tested on ``ds``'s test part.
    """
    if spec is None:
        spec = SplitSpec(SVM_SPLIT if classifier == "svm" else CNN_SPLIT)
    train, val, test = split(ds, spec)
    if train_ds is not None:
        train, val, _ = split(train_ds, spec)
    if classifier == "svm" and len(val):
        # the SVM has no use for a validation part
        train = _concat(train, val)
    if classifier == "cnn":
        val = _restrict(val, train.classes)
    model, predict = fit_classifier(train, val, classifier, configs)
    y_pred = predict(test.X)
    return score(test.labels, y_pred, sort_classes(ds.labels + list(y_pred))), model


def _concat(a: LabeledDataset, b: LabeledDataset) -> LabeledDataset:
    return replace(a, X=np.concatenate([a.X, b.X]), labels=a.labels + b.labels,
                   provenance=a.provenance + b.provenance)


# ---------------------------------------------------------------------------
# grid search


def _split_params(params: Mapping[str, object], configs: ClassifierConfigs, classifier: str):
    """Separate classifier hyperparameters from dataset-builder parameters."""
    fields = {
        "svm": {f.name for f in dataclasses.fields(SvmConfig)},
        "cnn": {f.name for f in dataclasses.fields(CnnConfig)},
        "train": {f.name for f in dataclasses.fields(TrainConfig)},
    }
    svm_kw, cnn_kw, train_kw, rest = {}, {}, {}, {}
    for k, v in params.items():
        if classifier == "svm" and k in fields["svm"]:
            svm_kw[k] = v
        elif classifier == "cnn" and k in fields["cnn"]:
            cnn_kw[k] = v
        elif classifier == "cnn" and k in fields["train"]:
            train_kw[k] = v
        else:
            rest[k] = v
    return ClassifierConfigs(replace(configs.svm, **svm_kw), replace(configs.cnn, **cnn_kw),
                             replace(configs.train, **train_kw)), rest


def grid_search(
    ds: LabeledDataset | Callable[[Mapping[str, object]], LabeledDataset],
    classifier: str,
    grid: Sequence[Mapping[str, object]],
    spec: SplitSpec = SplitSpec(CNN_SPLIT),
    configs: ClassifierConfigs = ClassifierConfigs(),
):
    """Pick the grid point with the best validation accuracy (first wins ties).

    ``ds`` may be a callable building the dataset from the non-classifier
    keys of each grid point (e.g. ``window_s``).  Returns
    ``(best_params, [(params, val_accuracy), ...])``; the test split is never
    scored.
    """
    if not grid:
        raise ConfigError("empty grid")
    if not spec.ratios[1] > 0:
        raise ConfigError("grid search needs a validation share")
    scores = []
    best, best_acc = None, -1.0
    for params in grid:
        cfgs, rest = _split_params(params, configs, classifier)
        data = ds(rest) if callable(ds) else ds
        if not callable(ds) and rest:
            raise ConfigError(f"unknown grid keys {sorted(rest)}")
        train, val, _ = split(data, spec)
        if classifier == "cnn":
            # the CNN's own early stopping would use this split too; give it the
            # validation part and score on the same data
            model, predict = fit_classifier(train, _restrict(val, train.classes), "cnn", cfgs)
        else:
            model, predict = fit_classifier(train, None, "svm", cfgs)
        acc = score(val.labels, predict(val.X)).accuracy
        scores.append((dict(params), acc))
        if acc > best_acc:
            best, best_acc = dict(params), acc
    return best, scores


# ---------------------------------------------------------------------------
# results table


class CellKey(NamedTuple):
    scenario: str
    population: str
    segmentation: str
    classifier: str


@dataclass
class ResultsTable:
    cells: dict[CellKey, CellResult] = field(default_factory=dict)

    def add(self, key: CellKey, result: CellResult) -> None:
        if not (0.0 <= result.accuracy <= 1.0):
            raise DataError(f"accuracy {result.accuracy} outside [0, 1]")
        self.cells[CellKey(*key)] = result

    def accuracy(self, scenario, population, segmentation, classifier) -> float:
        return self.cells[CellKey(scenario, population, segmentation, classifier)].accuracy


POP_LABELS = {"healthy": "Healthy", "patient": "Patients"}
SEG_LABELS = {"action": "Action", "spotting": "Spotting"}
COL_WIDTH = 10


def format_percent(acc: float | None) -> str:
    if acc is None or (isinstance(acc, float) and math.isnan(acc)):
        return "—"
    return f"{int(math.floor(acc * 100 + 0.5))}%"


def report(results: ResultsTable) -> tuple[str, str]:
    """Fixed-width text table (L1/L2 rows) and the full-precision CSV."""
    if not results.cells:
        raise DataError("no results to report")
    keys = results.cells.keys()
    columns = [
        (pop, seg, clf)
        for pop in ("healthy", "patient")
        for seg in SEGMENTATIONS
        for clf in CLASSIFIERS
        if any(k.population == pop and k.segmentation == seg and k.classifier == clf for k in keys)
    ]

    def line(first: str, cells: list[str]) -> str:
        return (first.ljust(COL_WIDTH) + "".join(c.ljust(COL_WIDTH) for c in cells)).rstrip()

    pop_row, seg_row, prev_pop, prev_seg = [], [], None, None
    for pop, seg, _ in columns:
        pop_row.append(POP_LABELS[pop] if pop != prev_pop else "")
        seg_row.append(SEG_LABELS[seg] if (pop, seg) != prev_seg else "")
        prev_pop, prev_seg = pop, (pop, seg)
    lines = [
        line("Scenario", pop_row),
        line("", seg_row),
        line("", [clf.upper() for _, _, clf in columns]),
    ]
    for scenario in ("L1", "L2"):
        cells = []
        for pop, seg, clf in columns:
            r = results.cells.get(CellKey(scenario, pop, seg, clf))
            cells.append(format_percent(r.accuracy if r else None))
        lines.append(line(scenario, cells))
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "population", "segmentation", "classifier", "accuracy", "n_test"])
    for key in sorted(results.cells):
        r = results.cells[key]
        w.writerow(list(key) + [repr(float(r.accuracy)), r.n_test])
    return text, buf.getvalue()


def read_results(stream: IO[str] | str) -> ResultsTable:
    """Parse a results CSV (confusion matrices are not stored there)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    table = ResultsTable()
    for row in csv.DictReader(stream):
        key = CellKey(row["scenario"], row["population"], row["segmentation"], row["classifier"])
        table.add(key, CellResult(float(row["accuracy"]), np.zeros((0, 0), dtype=np.int64), [],
                                  int(row["n_test"])))
    return table


def write_confusion(result: CellResult, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["true\\pred"] + [c.value for c in result.classes])
    for c, row in zip(result.classes, result.confusion):
        w.writerow([c.value] + [int(v) for v in row])


# ---------------------------------------------------------------------------
# full table


@dataclass(frozen=True)
class TableConfig:
    dataset: DatasetConfig = DatasetConfig()
    classifiers: ClassifierConfigs = ClassifierConfigs()
    seed: int = 0
    split_unit: str = "segment"
    svm_ratios: tuple[float, float, float] = SVM_SPLIT
    cnn_ratios: tuple[float, float, float] = CNN_SPLIT
    cells_classifiers: tuple[str, ...] = CLASSIFIERS
    # patients are scored with the SVM only unless this is set
    patient_cnn: bool = False
    # "same": patient cells train on patient data; "healthy": train on healthy data
    train_population: str = "same"

    def __post_init__(self):
        if self.train_population not in ("same", "healthy"):
            raise ConfigError("train_population must be 'same' or 'healthy'")


def cell_split(cfg: TableConfig, scenario: str, population: str, segmentation: str,
               classifier: str) -> SplitSpec:
    """Split used for one cell; the seed depends only on the data variant."""
    ratios = cfg.svm_ratios if classifier == "svm" else cfg.cnn_ratios
    return SplitSpec(ratios, sub_seed(cfg.seed, "split", scenario, population, segmentation),
                     cfg.split_unit)


def cell_configs(cfg: TableConfig, scenario: str, population: str,
                 segmentation: str) -> ClassifierConfigs:
    c = cfg.classifiers
    return replace(
        c,
        svm=replace(c.svm, seed=sub_seed(cfg.seed, "svm", scenario, population, segmentation)),
        cnn=replace(c.cnn, seed=sub_seed(cfg.seed, "cnn", scenario, population, segmentation)),
    )


def run_table(sessions: Sequence[Session], cfg: TableConfig = TableConfig(), prepared: bool = False):
    """Every (scenario, population, segmentation, classifier) cell the data supports.

    Returns ``(ResultsTable, {CellKey: model})``.
    """
    results = ResultsTable()
    models = {}
    populations = [p for p in ("healthy", "patient") if any(s.population == p for s in sessions)]
    cache: dict[tuple, LabeledDataset] = {}

    def dataset(scenario, seg, kind, pop):
        key = (scenario, seg, kind, pop)
        if key not in cache:
            cache[key] = build_dataset(sessions, scenario, seg, cfg.dataset, kind, pop, prepared)
        return cache[key]

    for scenario in ("L1", "L2"):
        if not any(s.scenario == scenario for s in sessions):
            continue
        for pop in populations:
            for seg in SEGMENTATIONS:
                for clf in cfg.cells_classifiers:
                    if pop == "patient" and clf == "cnn" and not cfg.patient_cnn:
                        continue
                    kind = "features" if clf == "svm" else "windows"
                    ds = dataset(scenario, seg, kind, pop)
                    spec = cell_split(cfg, scenario, pop, seg, clf)
                    configs = cell_configs(cfg, scenario, pop, seg)
                    train_ds = None
                    if pop == "patient" and cfg.train_population == "healthy":
                        train_ds = dataset(scenario, seg, kind, "healthy")
                    key = CellKey(scenario, pop, seg, clf)
                    log.info("cell %s: %d items", "/".join(key), len(ds))
                    result, model = run_cell(ds, clf, spec, configs, train_ds)
                    results.add(key, result)
                    models[key] = model
    return results, models
