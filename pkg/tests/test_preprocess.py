import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wristarc.data_model import ACC, ATT, GYR, MAG
from wristarc.errors import ConfigError
from wristarc.preprocess import (
    DriftConfig,
    FusionConfig,
    euler_to_quat,
    fuse_attitude,
    fuse_quaternions,
    gravity_in_body,
    moving_average,
    quat_to_euler,
    remove_drift,
)

from conftest import make_recording

RATE = 100.0
G = 9.81


def acc_recording(acc_cols, **kw):
    x = np.zeros((len(acc_cols[0]), 12))
    for j, col in enumerate(acc_cols):
        x[:, j] = col
    x[:, 3:] = np.arange(9)  # other channels carry a marker pattern
    return make_recording(x, **kw)


def brute_moving_average(x, width):
    half = width // 2
    n = len(x)
    return np.array([x[max(0, i - half) : min(n, i + half + 1)].mean() for i in range(n)])


# --- drift removal


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 80), st.integers(0, 2**32 - 1))
def test_moving_average_matches_loop(width, n, seed):
    x = np.random.default_rng(seed).normal(size=n)
    np.testing.assert_allclose(moving_average(x, width), brute_moving_average(x, width),
                               rtol=1e-12, atol=1e-12)


def test_constant_channel_goes_to_zero():
    rec = acc_recording([np.full(500, 3.7)] * 3)
    out = remove_drift(rec)
    np.testing.assert_allclose(out.samples[:, ACC], 0.0, atol=1e-12)


def test_ramp_interior_is_zero():
    t = np.arange(1000) / RATE
    rec = acc_recording([2.5 * t, -t, 0.1 * t])
    out = remove_drift(rec, DriftConfig(2.0))
    half = 100
    interior = out.samples[half:-half, ACC]
    assert np.max(np.abs(interior)) < 1e-9 * np.max(np.abs(rec.samples[:, ACC]))


def test_sinusoid_on_offset_matches_frequency_response():
    # oracle: the gain of x - moving_average(x) at frequency f, summed from the kernel taps
    f, width = 4.0, 201
    k = np.arange(-(width // 2), width // 2 + 1)
    h = np.mean(np.cos(2 * np.pi * f * k / RATE))
    t = np.arange(2000) / RATE
    rec = acc_recording([5.0 + np.sin(2 * np.pi * f * t)] * 3)
    out = remove_drift(rec, DriftConfig(2.0)).samples[300:-300, 0]
    expected = (1 - h) * np.sin(2 * np.pi * f * t[300:-300])
    np.testing.assert_allclose(out, expected, atol=1e-9)
    assert abs(np.max(np.abs(out)) - 1.0) < 0.05
    assert abs(out.mean()) < 0.01


def test_other_channels_and_metadata_untouched():
    rng = np.random.default_rng(0)
    rec = make_recording(rng.normal(size=(400, 12)), subject_id="S03", wrist="right",
                         scenario="L2", start_time=123.0)
    out = remove_drift(rec)
    np.testing.assert_array_equal(out.samples[:, 3:], rec.samples[:, 3:])
    assert out.meta == rec.meta and out.start_time == rec.start_time
    assert out.n_samples == rec.n_samples


def test_window_not_shorter_than_recording():
    with pytest.raises(ConfigError):
        remove_drift(make_recording(n=150), DriftConfig(2.0))


def test_bad_window():
    with pytest.raises(ConfigError):
        DriftConfig(0.0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 30), st.floats(-2, 2)), min_size=1, max_size=4),
       st.floats(-1, 1), st.floats(-5, 5))
def test_idempotent_on_interior(components, slope, offset):
    # sinusoids with whole cycles per window pass through unchanged and a ramp
    # is removed exactly, so away from the edges a second pass is a no-op
    width = 201
    t = np.arange(1500)
    x = offset + slope * t / RATE
    for m, amp in components:
        x = x + amp * np.sin(2 * np.pi * m * t / width)
    rec = acc_recording([x, x, x])
    once = remove_drift(rec)
    twice = remove_drift(once)
    edge = 2 * (width // 2)
    scale = max(1.0, np.max(np.abs(x)))
    diff = np.abs(twice.samples[edge:-edge, ACC] - once.samples[edge:-edge, ACC])
    assert diff.max() < 1e-6 * scale


# --- quaternions


@settings(max_examples=50, deadline=None)
@given(st.floats(-3.1, 3.1), st.floats(-1.5, 1.5), st.floats(-3.1, 3.1))
def test_euler_round_trip(yaw, pitch, roll):
    np.testing.assert_allclose(quat_to_euler(euler_to_quat(yaw, pitch, roll)),
                               [yaw, pitch, roll], atol=1e-9)


def test_gravity_in_body_identity():
    np.testing.assert_allclose(gravity_in_body(np.array([1.0, 0, 0, 0]), G), [0, 0, G])


# --- fusion


def imu_recording(n, gyro=(0, 0, 0), acc=(0, 0, G), mag=(22.0, 0.0, -42.0)):
    x = np.zeros((n, 12))
    x[:, GYR] = gyro
    x[:, ACC] = acc
    x[:, MAG] = mag
    return make_recording(x)


def test_stationary_linear_acceleration_vanishes(backend):
    out = fuse_attitude(imu_recording(300))
    assert np.max(np.abs(out.samples[100:, ACC])) < 0.01
    np.testing.assert_allclose(out.samples[:, ATT], 0.0, atol=1e-9)


def test_constant_yaw_rate_integrates(backend):
    rec = imu_recording(200, gyro=(0, 0, np.pi / 2))
    yaw = fuse_attitude(rec, FusionConfig(correction_gain=0.0)).samples[:, ATT][:, 0]
    # after 2 s the heading has advanced by pi (reported modulo 2 pi)
    assert abs(np.angle(np.exp(1j * (yaw[-1] - np.pi)))) < 1e-3


def test_yaw_matches_analytic_over_ten_seconds(backend):
    rate = 0.37
    rec = imu_recording(1000, gyro=(0, 0, rate))
    yaw = fuse_attitude(rec, FusionConfig(correction_gain=0.0)).samples[:, ATT][:, 0]
    expected = rate * (np.arange(1, 1001) / RATE)
    err = np.angle(np.exp(1j * (yaw - expected)))
    assert np.max(np.abs(err)) < 1e-3


def test_tilt_error_decays_like_scalar_filter(backend):
    # oracle: a fixed-gain complementary step shrinks the angle by (1 - gain) each sample
    q0 = euler_to_quat(0.0, np.radians(10.0), 0.0)
    rec = imu_recording(500)
    q = fuse_quaternions(rec, FusionConfig(correction_gain=0.1, use_magnetometer=False), q0)
    up = gravity_in_body(q, 1.0)
    err = np.degrees(np.arccos(np.clip(up[:, 2], -1, 1)))
    oracle = 10.0 * 0.9 ** np.arange(1, 501)
    np.testing.assert_allclose(err[:60], oracle[:60], atol=1e-6)
    assert np.all(np.diff(err[:60]) < 0)
    assert err[499] < 1.0


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_quaternion_stays_unit(seed):
    rng = np.random.default_rng(seed)
    x = np.zeros((400, 12))
    x[:, GYR] = rng.normal(scale=3.0, size=(400, 3))
    x[:, ACC] = rng.normal(scale=5.0, size=(400, 3))
    x[:, MAG] = rng.normal(scale=30.0, size=(400, 3))
    q = fuse_quaternions(make_recording(x))
    assert np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0)) < 1e-9


def test_zero_accelerometer_sample_skips_correction(backend):
    rec = imu_recording(50, acc=(0, 0, 0))
    q = fuse_quaternions(rec)
    assert np.all(np.isfinite(q))


def test_backends_agree():
    from wristarc._kernels import available_backends

    backends = available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(5)
    args = (rng.normal(size=(300, 3)), rng.normal(size=(300, 3)) + [0, 0, G],
            rng.normal(size=(300, 3)) * 20, 0.01, 0.1, True, np.array([1.0, 0, 0, 0]))
    a = np.asarray(backends["python"].fuse_quaternions(*args))
    b = np.asarray(backends["cython"].fuse_quaternions(*args))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_fusion_gain_range():
    with pytest.raises(ConfigError):
        FusionConfig(correction_gain=1.5)
