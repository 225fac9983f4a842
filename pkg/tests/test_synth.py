import numpy as np
import pytest

from wristarc.data_model import ACC, TARGET_CLASSES, MovementClass
from wristarc.errors import ConfigError
from wristarc.evaluate import build_dataset, split, SplitSpec
from wristarc.features import fit_scaler
from wristarc.synth import (
    CANONICAL_MODELS,
    ProtocolConfig,
    synth_corpus,
    synth_session,
    write_corpus,
)

QUIET = dict(noise_std=0.0, drift_rate=0.0)


def test_l1_protocol_order():
    ss = synth_session(ProtocolConfig(seed=1))
    assert len(ss.events) == 12
    dom, non = "right", "left"
    expected = [(c, w) for c in TARGET_CLASSES for w in ((dom,), (non,), tuple(sorted((dom, non))))]
    assert [(e.cls, e.wrists) for e in ss.events] == expected
    assert len(ss.pulses) == 16


def test_l2_mix():
    ss = synth_session(ProtocolConfig(scenario="L2", n_target=6, n_nontarget=5, seed=2))
    assert sum(e.cls.is_target for e in ss.events) == 6
    assert sum(e.cls.is_nontarget for e in ss.events) == 5


@pytest.mark.parametrize("scenario", ["L1", "L2"])
def test_noise_free_signal_is_only_pulses(scenario):
    ss = synth_session(ProtocolConfig(scenario=scenario, seed=4, jitter=0.0, **QUIET))
    for rec, track in ss.session.wrists():
        wrist = rec.wrist
        acc = rec.samples[:, ACC]
        moving = np.zeros(rec.n_samples, dtype=bool)
        for iv in track:
            if iv.label is not MovementClass.REST:
                moving[iv.start : iv.end] = True
        assert np.all(acc[~moving] == 0.0)
        norm = np.linalg.norm(acc, axis=1)
        for p in ss.pulses_for(wrist, targets_only=True):
            seg = norm[p.start : p.end]
            want = np.mean(CANONICAL_MODELS[p.cls].peak_accel)
            assert int(np.argmax(seg)) + p.start == p.peak
            assert abs(seg.max() - want) < 1e-12


def test_track_covers_recording():
    ss = synth_session(ProtocolConfig(scenario="L2", seed=6))
    for rec, track in ss.session.wrists():
        ivs = list(track)
        assert ivs[0].start == 0 and ivs[-1].end == rec.n_samples
        assert all(a.end == b.start for a, b in zip(ivs, ivs[1:]))


def test_deterministic_and_seed_sensitive():
    a = synth_session(ProtocolConfig(scenario="L2", seed=9))
    b = synth_session(ProtocolConfig(scenario="L2", seed=9))
    c = synth_session(ProtocolConfig(scenario="L2", seed=10))
    np.testing.assert_array_equal(a.session.left.samples, b.session.left.samples)
    assert a.pulses == b.pulses
    assert a.session.left.n_samples != c.session.left.n_samples or \
        not np.array_equal(a.session.left.samples, c.session.left.samples)


def test_zero_jitter_repeats_identical_pulses():
    ss = synth_session(ProtocolConfig(seed=3, jitter=0.0, **QUIET))
    right = ss.session.right.samples[:, ACC]
    shapes = {}
    for p in ss.pulses_for("right"):
        shapes.setdefault(p.cls, []).append(right[p.start : p.end])
    for cls, pulses in shapes.items():
        for other in pulses[1:]:
            np.testing.assert_array_equal(other, pulses[0])


def test_patient_affected_wrist_scaled():
    cfg = ProtocolConfig(seed=3, jitter=0.0, population="patient", hemiparesis_scale=0.4, **QUIET)
    ss = synth_session(cfg)
    left = np.linalg.norm(ss.session.left.samples[:, ACC], axis=1)
    right = np.linalg.norm(ss.session.right.samples[:, ACC], axis=1)
    assert abs(left.max() / right.max() - 0.4) < 1e-12


def test_protocol_config_errors():
    with pytest.raises(ConfigError):
        ProtocolConfig(scenario="L3")
    with pytest.raises(ConfigError):
        ProtocolConfig(classes=(MovementClass.R1,))
    with pytest.raises(ConfigError):
        synth_corpus(0)


def test_corpus_structure():
    corpus = synth_corpus(25, l2_sessions=3)
    l1 = [ss for ss in corpus if ss.config.scenario == "L1"]
    l2 = [ss for ss in corpus if ss.config.scenario == "L2"]
    assert len(l2) == 75 and len(l1) == 100
    assert len({ss.session.subject_id for ss in corpus}) == 25
    assert len({ss.session.session_id for ss in corpus}) == 175


def test_target_classes_are_separable_by_centroids():
    # nearest class centroid on standardised features is a weak oracle; if it
    # separates the classes the generator is doing its job
    corpus = synth_corpus(6, l2_sessions=0)
    ds = build_dataset([ss.session for ss in corpus], "L1", "action")
    train, _, test = split(ds, SplitSpec((0.5, 0.0, 0.5), seed=0))
    scaler = fit_scaler(train.X)
    Ztr, Zte = scaler.transform(train.X), scaler.transform(test.X)
    classes = train.classes
    centroids = np.array([Ztr[[l is c for l in train.labels]].mean(axis=0) for c in classes])
    d = ((Zte[:, None, :] - centroids[None]) ** 2).sum(axis=2)
    pred = [classes[i] for i in np.argmin(d, axis=1)]
    assert np.mean([p is t for p, t in zip(pred, test.labels)]) >= 0.95


def test_manifest_is_stable(tmp_path):
    corpus = synth_corpus(2, l2_sessions=1)
    a = write_corpus(corpus, tmp_path / "a").read_bytes()
    b = write_corpus(synth_corpus(2, l2_sessions=1), tmp_path / "b").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == "path,subject_id,session_id,scenario,population,seed,sha256"
    # per session: two recordings, two metadata files, two label files, planted ground truth
    assert len(lines) - 1 == 7 * len(corpus)
