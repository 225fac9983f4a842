"""``wristarc`` command line: synth, ingest, preprocess, segment, features, train, eval, report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cnn as cnn_mod
from . import svm as svm_mod
from .config import PipelineConfig, format_config, load_config
from .corpus import find_session_dirs, load_corpus, load_session_dir, session_files, write_files
from .data_model import sort_classes
from .errors import ConfigError, DataError, NumericError
from .evaluate import (
    SEGMENTATIONS,
    CellKey,
    ResultsTable,
    build_dataset,
    candidate_segments,
    cell_configs,
    cell_split,
    fit_classifier,
    label_segment,
    load_dataset,
    prepare_recording,
    read_results,
    report,
    run_table,
    save_dataset,
    score,
    split,
    write_confusion,
)
from .segment import write_segments
from .synth import synth_corpus, write_corpus

log = logging.getLogger("wristarc")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
PREPARED_MARKER = "PREPROCESSED"


def _out_dir(args, cfg: PipelineConfig) -> Path:
    out = args.out or cfg.paths.out
    if not out:
        raise ConfigError("no output directory: pass --out or set paths.out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _input_dir(args, cfg: PipelineConfig) -> Path:
    src = getattr(args, "input", None) or cfg.paths.data
    if not src:
        raise ConfigError("no input directory: pass one or set paths.data")
    return Path(src)


def _is_prepared(root: Path) -> bool:
    return (root / PREPARED_MARKER).exists()


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))


# ---------------------------------------------------------------------------
# commands


def cmd_synth(cfg: PipelineConfig, args) -> int:
    out = _out_dir(args, cfg)
    s = cfg.synth
    sessions = synth_corpus(s.n_subjects, cfg.protocol_template(), s.l2_sessions,
                            s.n_patients, s.patient_scale)
    manifest = write_corpus(sessions, out)
    _write_text(out / "config.txt", format_config(cfg))
    print(f"wrote {len(sessions)} sessions; manifest {manifest}")
    return EXIT_OK


def cmd_ingest(cfg: PipelineConfig, args) -> int:
    root = _input_dir(args, cfg)
    sessions = load_corpus(root)
    out = _out_dir(args, cfg)
    with (out / "sessions.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "session_id", "scenario", "population", "sample_rate_hz",
                    "n_samples", "labels_left", "labels_right"])
        for s in sessions:
            w.writerow([s.subject_id, s.session_id, s.scenario, s.population,
                        repr(float(s.left.sample_rate)), s.left.n_samples,
                        len(s.labels_left), len(s.labels_right)])
    print(f"ingested {len(sessions)} sessions from {root}")
    return EXIT_OK


def cmd_preprocess(cfg: PipelineConfig, args) -> int:
    root = _input_dir(args, cfg)
    if _is_prepared(root):
        raise DataError(f"{root} is already preprocessed")
    out = _out_dir(args, cfg)
    dcfg = cfg.dataset_config()
    dirs = find_session_dirs(root)
    if not dirs:
        raise DataError(f"no recordings found under {root}")
    for d in dirs:
        s = load_session_dir(d)
        s = replace(s, left=prepare_recording(s.left, dcfg), right=prepare_recording(s.right, dcfg))
        write_files(session_files(s, d.relative_to(root).as_posix()), out)
    _write_text(out / PREPARED_MARKER, format_config(cfg))
    print(f"preprocessed {len(dirs)} sessions into {out}")
    return EXIT_OK


def cmd_segment(cfg: PipelineConfig, args) -> int:
    root = _input_dir(args, cfg)
    out = _out_dir(args, cfg)
    dcfg = cfg.dataset_config()
    prepared = _is_prepared(root)
    dirs = find_session_dirs(root)
    if not dirs:
        raise DataError(f"no recordings found under {root}")
    total = 0
    for d in dirs:
        s = load_session_dir(d)
        rel = d.relative_to(root).as_posix()
        for raw, track in s.wrists():
            rec = raw if prepared else prepare_recording(raw, dcfg)
            segs = candidate_segments(rec, s.scenario, args.segmentation, dcfg)
            labelled = [replace(g, label=label_segment(track, g, s.scenario, dcfg.overlap_threshold))
                        for g in segs]
            path = out / rel / f"{raw.wrist}_segments_{args.segmentation}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                write_segments(labelled, fh)
            total += len(segs)
    print(f"wrote {total} {args.segmentation} segments for {len(dirs)} sessions")
    return EXIT_OK


def _dataset_name(scenario, population, segmentation, kind) -> str:
    return f"{scenario}_{population}_{segmentation}_{kind}"


def cmd_features(cfg: PipelineConfig, args) -> int:
    root = _input_dir(args, cfg)
    out = _out_dir(args, cfg)
    sessions = load_corpus(root)
    prepared = _is_prepared(root)
    kinds = ("features", "windows") if args.kind == "both" else (args.kind,)
    n = 0
    for scenario in ("L1", "L2"):
        for pop in ("healthy", "patient"):
            if not any(s.scenario == scenario and s.population == pop for s in sessions):
                continue
            for seg in SEGMENTATIONS:
                for kind in kinds:
                    ds = build_dataset(sessions, scenario, seg, cfg.dataset_config(), kind, pop,
                                       prepared)
                    save_dataset(ds, out / _dataset_name(scenario, pop, seg, kind))
                    n += 1
    print(f"wrote {n} datasets to {out}")
    return EXIT_OK


def cmd_train(cfg: PipelineConfig, args) -> int:
    ds = load_dataset(args.dataset)
    out = _out_dir(args, cfg)
    clf = args.classifier or ("svm" if ds.kind == "features" else "cnn")
    tcfg = cfg.table_config()
    spec = cell_split(tcfg, ds.scenario, ds.population, ds.segmentation, clf)
    configs = cell_configs(tcfg, ds.scenario, ds.population, ds.segmentation)
    train, val, _ = split(ds, spec)
    if clf == "svm":
        train = replace(train, X=_stack(train.X, val.X), labels=train.labels + val.labels,
                        provenance=train.provenance + val.provenance)
    model, _ = fit_classifier(train, val, clf, configs)
    stem = out / f"{Path(args.dataset).name}_{clf}"
    if clf == "svm":
        _write_text(stem.with_suffix(".csv"), svm_mod.serialize_svm(model))
        print(f"wrote {stem.with_suffix('.csv')}")
    else:
        stem.with_suffix(".bin").write_bytes(cnn_mod.serialize_cnn(model))
        with open(f"{stem}_history.csv", "w", newline="") as fh:
            cnn_mod.write_history(model, fh)
        print(f"wrote {stem.with_suffix('.bin')}")
    return EXIT_OK


def _stack(a, b):
    return np.concatenate([a, b]) if len(b) else a


def _load_model(path: str):
    p = Path(path)
    if not p.exists():
        raise DataError(f"model file {p} not found")
    data = p.read_bytes()
    if data.startswith(cnn_mod.FORMAT_MAGIC):
        model = cnn_mod.read_cnn(data)
        return "cnn", lambda X: cnn_mod.predict(model, X)
    model = svm_mod.read_svm(data.decode("utf-8"))
    return "svm", model.predict


def _write_results(results: ResultsTable, out: Path) -> None:
    text, table_csv = report(results)
    _write_text(out / "results.csv", table_csv)
    _write_text(out / "table.txt", text)
    for key, r in sorted(results.cells.items()):
        if r.confusion.size:
            path = out / "confusion" / f"{'_'.join(key)}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                write_confusion(r, fh)
    sys.stdout.write(text)


def cmd_eval(cfg: PipelineConfig, args) -> int:
    out = _out_dir(args, cfg)
    tcfg = cfg.table_config()
    if args.full:
        if args.input or cfg.paths.data:
            root = _input_dir(args, cfg)
            sessions, prepared = load_corpus(root), _is_prepared(root)
        else:
            s = cfg.synth
            sessions = [ss.session for ss in synth_corpus(
                s.n_subjects, cfg.protocol_template(), s.l2_sessions, s.n_patients,
                s.patient_scale)]
            prepared = False
        results, models = run_table(sessions, tcfg, prepared)
        for key, model in sorted(models.items()):
            stem = out / "models" / "_".join(key)
            if key.classifier == "svm":
                _write_text(stem.with_suffix(".csv"), svm_mod.serialize_svm(model))
            else:
                stem.parent.mkdir(parents=True, exist_ok=True)
                stem.with_suffix(".bin").write_bytes(cnn_mod.serialize_cnn(model))
        _write_results(results, out)
        return EXIT_OK
    if not args.model or not args.dataset:
        raise ConfigError("eval needs --model and --dataset (or --full)")
    clf, predict = _load_model(args.model)
    ds = load_dataset(args.dataset)
    spec = cell_split(tcfg, ds.scenario, ds.population, ds.segmentation, clf)
    _, _, test = split(ds, spec)
    y_pred = predict(test.X)
    results = ResultsTable()
    results.add(CellKey(ds.scenario, ds.population, ds.segmentation, clf),
                score(test.labels, y_pred, sort_classes(ds.labels + list(y_pred))))
    _write_results(results, out)
    return EXIT_OK


def cmd_report(cfg: PipelineConfig, args) -> int:
    merged = ResultsTable()
    for path in args.results:
        p = Path(path)
        if not p.exists():
            raise DataError(f"results file {p} not found")
        with p.open(newline="") as fh:
            for key, r in read_results(fh).cells.items():
                if key in merged.cells:
                    raise DataError(f"cell {'/'.join(key)} appears in more than one file")
                merged.add(key, r)
    text, table_csv = report(merged)
    if args.out or cfg.paths.out:
        out = _out_dir(args, cfg)
        _write_text(out / "results.csv", table_csv)
        _write_text(out / "table.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config file (section.key = value)")
    common.add_argument("--seed", type=int, help="global seed (overrides the config)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wristarc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    for name, text in (("ingest", "validate a corpus and summarise its sessions"),
                       ("preprocess", "drift removal (and fusion) into a new corpus")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("input", nargs="?")
    sp = sub.add_parser("segment", parents=[common], help="segment CSVs per recording")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--segmentation", choices=SEGMENTATIONS, default="action")
    sp = sub.add_parser("features", parents=[common], help="labelled datasets per cell")
    sp.add_argument("input", nargs="?")
    sp.add_argument("--kind", choices=("features", "windows", "both"), default="both")
    sp = sub.add_parser("train", parents=[common], help="train one classifier on a dataset")
    sp.add_argument("dataset", help="dataset path prefix written by 'features'")
    sp.add_argument("--classifier", choices=("svm", "cnn"))
    sp = sub.add_parser("eval", parents=[common], help="score a model, or run the full table")
    sp.add_argument("input", nargs="?", help="corpus directory for --full (default: synthesise)")
    sp.add_argument("--model")
    sp.add_argument("--dataset")
    sp.add_argument("--full", action="store_true", help="run every table cell end to end")
    sp = sub.add_parser("report", parents=[common], help="merge results CSVs into the table")
    sp.add_argument("results", nargs="+")
    return p


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "segment": cmd_segment,
    "features": cmd_features,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
