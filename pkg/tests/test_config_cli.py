import csv
from pathlib import Path

import pytest

from wristarc import cli
from wristarc.config import PipelineConfig, format_config, load_config, parse_config
from wristarc.errors import ConfigError, NumericError
from wristarc.segment import read_segments
from wristarc.synth import ProtocolConfig, synth_session, write_corpus

FAST = """\
seed = 5
[synth]
n_subjects = 3
l2_sessions = 1
[train]
epochs = 2
patience = 2
"""


# --- config parsing


def test_empty_config_is_default():
    assert parse_config("") == PipelineConfig()
    assert load_config(None) == PipelineConfig()


def test_sections_and_dotted_keys():
    cfg = parse_config(
        "seed = 7\n"
        "# comment\n"
        "svm.c = 2.5\n"
        "[window]\n"
        "window_s = 2.0   # trailing comment\n"
        "[split]\n"
        "unit = session\n"
        "cnn_ratios = 0.5, 0.25, 0.25\n"
        "fusion.enabled = yes\n"
        "eval.action_length_s = none\n"
    )
    assert cfg.seed == 7 and cfg.svm.c == 2.5 and cfg.window.window_s == 2.0
    assert cfg.split.unit == "session" and cfg.split.cnn_ratios == (0.5, 0.25, 0.25)
    assert cfg.fusion.enabled and cfg.dataset_config().fusion is not None
    assert cfg.eval.action_length_s is None


def test_format_round_trips():
    cfg = parse_config("seed = 3\nsvm.c = 0.1\nfeatures.channels = acc_x,acc_y\n"
                       "eval.classifiers = svm\ntrain.learning_rate = 3e-4\n")
    assert parse_config(format_config(cfg)) == cfg
    assert parse_config(format_config(PipelineConfig())) == PipelineConfig()


@pytest.mark.parametrize("text,line,fragment", [
    ("svm.bogus = 1\n", 1, "unknown key svm.bogus"),
    ("seed = 1\n\nnosuch.key = 2\n", 3, "unknown section"),
    ("[nosuch]\n", 1, "unknown section"),
    ("svm.c = 1\nsvm.c = 2\n", 2, "duplicate"),
    ("seed = 1\njust text\n", 2, "expected key = value"),
    ("svm.c = high\n", 1, "expected float"),
    ("fusion.enabled = maybe\n", 1, "boolean"),
    ("cnn.channels = 3\n", 1, "unknown key"),
    ("\n\nsvm.c = -1\n", 3, ""),
    ("split.svm_ratios = 0.5, 0.5\n", 1, "expects 3"),
])
def test_errors_are_line_anchored(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


# --- exit codes


def run(argv):
    return cli.main([str(a) for a in argv])


def test_exit_codes(tmp_path, monkeypatch, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("svm.bogus = 1\n")
    assert run(["synth", "--config", bad, "--out", tmp_path / "x"]) == cli.EXIT_CONFIG
    assert "line 1" in capsys.readouterr().err
    assert run(["segment", tmp_path / "missing", "--out", tmp_path / "o"]) == cli.EXIT_DATA
    (tmp_path / "empty").mkdir()
    assert run(["segment", tmp_path / "empty", "--out", tmp_path / "o"]) == cli.EXIT_DATA
    assert run(["eval", "--model", tmp_path / "none.csv", "--dataset", tmp_path / "d",
                "--out", tmp_path / "o"]) == cli.EXIT_DATA
    assert "not found" in capsys.readouterr().err
    assert run(["synth"]) == cli.EXIT_CONFIG  # no output directory

    def boom(cfg, args):
        raise NumericError("diverged")

    monkeypatch.setitem(cli.COMMANDS, "report", boom)
    assert run(["report", "r.csv"]) == cli.EXIT_NUMERIC


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST)
    assert run(["synth", "--config", cfg, "--out", blocker / "sub"]) == cli.EXIT_DATA
    assert capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["nosuchcommand"])
    assert info.value.code == 2


# --- synth


@pytest.mark.slow
def test_default_synth_file_count(tmp_path):
    assert run(["synth", "--out", tmp_path]) == 0
    files = [p for p in tmp_path.rglob("*") if p.is_file()]
    # 25 subjects x (4 L1 + 3 L2) sessions x 7 files, manifest and config
    assert len(files) == 25 * 7 * 7 + 2


def test_synth_repeatable(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST)
    assert run(["synth", "--config", cfg, "--out", tmp_path / "a"]) == 0
    assert run(["synth", "--config", cfg, "--out", tmp_path / "b"]) == 0
    assert (tmp_path / "a/manifest.csv").read_bytes() == (tmp_path / "b/manifest.csv").read_bytes()
    assert run(["synth", "--config", cfg, "--seed", "6", "--out", tmp_path / "c"]) == 0
    assert (tmp_path / "a/manifest.csv").read_bytes() != (tmp_path / "c/manifest.csv").read_bytes()


# --- segment


def one_session(tmp_path, scenario):
    ss = synth_session(ProtocolConfig(scenario=scenario, seed=21, subject_id="S01",
                                      session_id=f"S01_{scenario}"))
    write_corpus([ss], tmp_path / "in")
    return ss


def read_segment_file(path: Path):
    return read_segments(path.read_text())


def test_segment_l1_finds_every_event(tmp_path):
    ss = one_session(tmp_path, "L1")
    rate = ss.config.sample_rate
    tol = 0.25 * rate
    for segmentation in ("action", "spotting"):
        assert run(["segment", tmp_path / "in", "--segmentation", segmentation,
                    "--out", tmp_path / "seg"]) == 0
        found = set()
        for wrist in ("left", "right"):
            path = tmp_path / "seg" / "S01" / "S01_L1" / f"{wrist}_segments_{segmentation}.csv"
            targets = [s for s in read_segment_file(path) if s.label is not None]
            pulses = ss.pulses_for(wrist, targets_only=True)
            assert len(targets) == len(pulses)
            for p in pulses:
                hits = [s for s in targets if abs((s.start + s.end - 1) / 2 - p.peak) <= tol]
                assert len(hits) == 1 and hits[0].label is p.cls
                found.add(p.event)
        assert len(found) == len(ss.events) == 12


def test_segment_l2_window_count(tmp_path):
    ss = one_session(tmp_path, "L2")
    assert run(["segment", tmp_path / "in", "--out", tmp_path / "seg"]) == 0
    n = ss.session.left.n_samples
    for wrist in ("left", "right"):
        segs = read_segment_file(tmp_path / "seg" / "S01" / "S01_L2" / f"{wrist}_segments_action.csv")
        assert len(segs) == n // 300
        assert all(len(s) == 300 for s in segs)


def test_preprocess_then_segment_matches(tmp_path):
    one_session(tmp_path, "L1")
    assert run(["segment", tmp_path / "in", "--out", tmp_path / "direct"]) == 0
    assert run(["preprocess", tmp_path / "in", "--out", tmp_path / "prep"]) == 0
    assert run(["preprocess", tmp_path / "prep", "--out", tmp_path / "again"]) == cli.EXIT_DATA
    assert run(["segment", tmp_path / "prep", "--out", tmp_path / "via"]) == 0
    a = read_segment_file(tmp_path / "direct/S01/S01_L1/left_segments_action.csv")
    b = read_segment_file(tmp_path / "via/S01/S01_L1/left_segments_action.csv")
    assert [(s.start, s.end, s.label) for s in a] == [(s.start, s.end, s.label) for s in b]


# --- pipeline


def test_stepwise_pipeline(tmp_path, capsys):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST)
    assert run(["synth", "--config", cfg, "--out", tmp_path / "data"]) == 0
    assert run(["ingest", tmp_path / "data", "--out", tmp_path / "ing"]) == 0
    with (tmp_path / "ing/sessions.csv").open() as fh:
        assert len(list(csv.DictReader(fh))) == 3 * 5
    assert run(["features", tmp_path / "data", "--kind", "features", "--config", cfg,
                "--out", tmp_path / "ds"]) == 0
    prefix = tmp_path / "ds" / "L1_healthy_action_features"
    assert run(["train", prefix, "--config", cfg, "--out", tmp_path / "models"]) == 0
    model = tmp_path / "models" / "L1_healthy_action_features_svm.csv"
    assert model.exists()
    capsys.readouterr()
    assert run(["eval", "--model", model, "--dataset", prefix, "--config", cfg,
                "--out", tmp_path / "ev"]) == 0
    text = capsys.readouterr().out
    row = [l for l in text.splitlines() if l.startswith("L1")][0].split()
    assert row[1].endswith("%") and row[1][:-1].isdigit()
    assert run(["report", tmp_path / "ev/results.csv"]) == 0
    assert capsys.readouterr().out == text


@pytest.mark.slow
def test_full_pipeline_has_eight_healthy_cells(tmp_path):
    cfg = tmp_path / "fast.cfg"
    cfg.write_text(FAST)
    assert run(["eval", "--full", "--config", cfg, "--out", tmp_path / "a"]) == 0
    with (tmp_path / "a/results.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    healthy = {(r["scenario"], r["segmentation"], r["classifier"]) for r in rows
               if r["population"] == "healthy"}
    assert len(healthy) == 8 and len(rows) == 8
    assert (tmp_path / "a/table.txt").read_text().startswith("Scenario")
    assert len(list((tmp_path / "a/confusion").glob("*.csv"))) == 8
    assert len(list((tmp_path / "a/models").iterdir())) == 8
    assert run(["eval", "--full", "--config", cfg, "--out", tmp_path / "b"]) == 0
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()
