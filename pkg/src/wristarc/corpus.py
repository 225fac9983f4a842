"""On-disk session layout: ``<subject>/<session>/{left,right}{.csv,.meta,_labels.csv}``."""

from __future__ import annotations

from pathlib import Path

from .data_model import (
    LabelTrack,
    Session,
    align_session,
    format_meta,
    parse_labels,
    parse_meta,
    parse_recording,
    serialize_labels,
    serialize_recording,
)
from .errors import DataError

WRISTS = ("left", "right")


def session_files(session: Session, prefix: str | None = None) -> dict[str, str]:
    """Relative path -> file contents for the two wrists of a session."""
    prefix = prefix or f"{session.subject_id}/{session.session_id}"
    files = {}
    for rec, track in session.wrists():
        files[f"{prefix}/{rec.wrist}.csv"] = serialize_recording(rec)
        files[f"{prefix}/{rec.wrist}.meta"] = format_meta(rec.meta)
        files[f"{prefix}/{rec.wrist}_labels.csv"] = serialize_labels(track, rec.sample_rate)
    return files


def write_files(files: dict[str, str], out_dir: str | Path) -> None:
    out = Path(out_dir)
    for rel, text in sorted(files.items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(text.encode("utf-8"))


def load_session_dir(path: str | Path) -> Session:
    """Read and align the left/right pair stored in one session directory."""
    path = Path(path)
    recs, tracks = {}, {}
    for wrist in WRISTS:
        csv_path, meta_path = path / f"{wrist}.csv", path / f"{wrist}.meta"
        if not csv_path.exists() or not meta_path.exists():
            raise DataError(f"{path}: missing {wrist}.csv or {wrist}.meta")
        meta = parse_meta(meta_path.read_text())
        if meta.wrist != wrist:
            raise DataError(f"{meta_path}: metadata says wrist={meta.wrist}")
        try:
            with csv_path.open(newline="") as fh:
                recs[wrist] = parse_recording(fh, meta)
        except DataError as exc:
            raise DataError(f"{csv_path}: {exc}") from exc
        label_path = path / f"{wrist}_labels.csv"
        if label_path.exists():
            with label_path.open(newline="") as fh:
                tracks[wrist] = parse_labels(fh, meta.sample_rate)
        else:
            tracks[wrist] = LabelTrack()
    return align_session(recs["left"], recs["right"], tracks["left"], tracks["right"],
                         recs["left"].session_id or path.name)


def find_session_dirs(root: str | Path) -> list[Path]:
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    return sorted(p.parent for p in root.rglob("left.csv"))


def load_corpus(root: str | Path) -> list[Session]:
    """Every session under ``root``, in sorted directory order."""
    dirs = find_session_dirs(root)
    if not dirs:
        raise DataError(f"no recordings found under {root}")
    return [load_session_dir(d) for d in dirs]
