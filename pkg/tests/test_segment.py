import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wristarc.data_model import ACC, Segment
from wristarc.errors import ConfigError
from wristarc.preprocess import remove_drift
from wristarc.segment import (
    RestConfig,
    SpotConfig,
    WindowConfig,
    read_segments,
    segment_by_rest,
    short_time_energy,
    sliding_windows,
    spot_gesture,
    write_segments,
)
from wristarc.synth import ProtocolConfig, synth_session

from conftest import make_recording


def acc_only(acc_x, acc_y=None, acc_z=None):
    n = len(acc_x)
    x = np.zeros((n, 12))
    x[:, 0] = acc_x
    if acc_y is not None:
        x[:, 1] = acc_y
    if acc_z is not None:
        x[:, 2] = acc_z
    return make_recording(x)


# --- energy


def test_energy_of_zeros():
    assert np.all(short_time_energy(acc_only(np.zeros(300))) == 0)


def test_energy_of_constant_norm():
    rec = acc_only(np.full(300, 3.0), np.full(300, 4.0))
    np.testing.assert_allclose(short_time_energy(rec), 25.0)


def test_energy_of_impulse():
    x = np.zeros(400)
    x[200] = 1.0
    e = short_time_energy(acc_only(x), RestConfig(energy_window_s=0.51))
    w = 51
    np.testing.assert_allclose(e[200 - w // 2 : 200 + w // 2 + 1], 1.0 / w)
    assert np.count_nonzero(e) == w


# --- rest segmentation


def test_three_movements_between_exact_rests():
    x = np.zeros(2200)
    planted = [(500, 700), (1200, 1450), (1950, 2100)]
    for s, e in planted:
        x[s:e] = np.sin(np.linspace(0, np.pi, e - s)) * 3
    segs = segment_by_rest(acc_only(x))
    assert len(segs) == 3
    for seg, (s, e) in zip(segs, planted):
        assert seg.start <= s and e <= seg.end


def test_all_rest_gives_nothing():
    assert segment_by_rest(acc_only(np.zeros(1000))) == []


def test_continuous_movement_is_one_segment():
    x = 2.0 + np.sin(np.arange(800) / 10.0)
    segs = segment_by_rest(acc_only(x))
    assert [(s.start, s.end) for s in segs] == [(0, 800)]


def test_rest_config_bounds():
    with pytest.raises(ConfigError):
        RestConfig(min_rest_s=6.0)
    with pytest.raises(ConfigError):
        RestConfig(energy_threshold=0.0)


@st.composite
def bursty(draw):
    n = draw(st.integers(300, 1500))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    for _ in range(draw(st.integers(0, 6))):
        s = int(rng.integers(0, n - 10))
        e = min(n, s + int(rng.integers(5, 300)))
        x[s:e] += rng.normal(scale=rng.uniform(0.05, 2.0), size=e - s)
    return x


@settings(max_examples=40, deadline=None)
@given(bursty(), st.floats(0.001, 0.5), st.floats(1.0, 4.0))
def test_rest_segments_sorted_disjoint_and_monotone(x, thr, factor):
    rec = acc_only(x)
    low = segment_by_rest(rec, RestConfig(energy_threshold=thr))
    high = segment_by_rest(rec, RestConfig(energy_threshold=thr * factor))
    for segs in (low, high):
        for a, b in zip(segs, segs[1:]):
            assert a.end <= b.start
        assert all(0 <= s.start < s.end <= rec.n_samples for s in segs)
    assert sum(len(s) for s in high) <= sum(len(s) for s in low)


def test_recovers_planted_targets():
    ss = synth_session(ProtocolConfig(seed=11))
    for wrist in ("left", "right"):
        raw = ss.session.left if wrist == "left" else ss.session.right
        segs = segment_by_rest(remove_drift(raw))
        for p in ss.pulses_for(wrist, targets_only=True):
            hits = [s for s in segs if s.start <= p.peak < s.end]
            assert len(hits) == 1


# --- sliding windows


def test_windows_drop_the_tail():
    segs = sliding_windows(make_recording(n=1000), WindowConfig(3.0))
    assert [(s.start, s.end) for s in segs] == [(0, 300), (300, 600), (600, 900)]


def test_window_boundaries():
    assert len(sliding_windows(make_recording(n=300))) == 1
    assert sliding_windows(make_recording(n=299)) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3000), st.floats(0.01, 10.0))
def test_windows_cover_exactly(n, window_s):
    rec = make_recording(n=n)
    w = int(round(window_s * 100))
    if w < 1:
        return
    segs = sliding_windows(rec, WindowConfig(window_s))
    cover = np.zeros(n, dtype=int)
    for s in segs:
        assert len(s) == w
        cover[s.start : s.end] += 1
    assert cover.sum() == w * (n // w)
    assert np.all(cover[: w * (n // w)] == 1)


# --- spotting


def test_spot_triangle():
    x = np.maximum(0, 50 - np.abs(np.arange(300) - 100)).astype(float)
    seg = spot_gesture(acc_only(x), Segment(0, 300))
    assert (seg.start, seg.end) == (75, 126)


def test_spot_clamps_at_start():
    x = np.zeros(300)
    x[3] = 1.0
    seg = spot_gesture(acc_only(x), Segment(0, 300))
    assert (seg.start, seg.end) == (0, 29)


def test_spot_earliest_tie():
    x = np.zeros(300)
    x[50] = x[200] = 2.0
    seg = spot_gesture(acc_only(x), Segment(0, 300))
    assert seg.start == 25 and seg.end == 76


def test_spot_peak_channel_override():
    x = np.zeros((300, 12))
    x[40, 0] = 5.0
    x[120, 4] = 1.0
    rec = make_recording(x)
    assert spot_gesture(rec, Segment(0, 300), SpotConfig(peak_channel="gyr_y")).start == 95


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.6), st.floats(0, 0.6))
def test_spot_contract(seed, before_s, after_s):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 400))
    rec = make_recording(rng.normal(size=(n, 12)))
    s = int(rng.integers(0, n - 1))
    e = int(rng.integers(s + 1, n + 1))
    cfg = SpotConfig(before_s, after_s)
    out = spot_gesture(rec, Segment(s, e), cfg)
    norm = np.linalg.norm(rec.samples[s:e, ACC], axis=1)
    p = s + int(np.argmax(norm))
    b, a = cfg.margins(100.0)
    assert s <= out.start <= p < out.end <= e
    assert len(out) <= b + a + 1


def test_segment_csv_round_trip():
    from wristarc.data_model import MovementClass

    segs = [Segment(0, 10, MovementClass.M1), Segment(12, 40), Segment(40, 41, MovementClass.NULL)]
    buf = io.StringIO()
    write_segments(segs, buf)
    back = read_segments(buf.getvalue())
    assert [(s.start, s.end, s.label) for s in back] == [(s.start, s.end, s.label) for s in segs]
