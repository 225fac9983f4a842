import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wristarc.data_model import MovementClass
from wristarc.errors import ConfigError, DataError, ShapeMismatch
from wristarc.features import FeatureVector, Scaler, fit_scaler
from wristarc.svm import (
    SvmConfig,
    SvmModel,
    kkt_violation,
    predict_svm,
    read_svm,
    serialize_svm,
    solve_binary,
    train_svm,
)

M1, M2, M3, M4 = MovementClass.M1, MovementClass.M2, MovementClass.M3, MovementClass.M4


def blobs(n=200, k=4, d=6, sigma=1.0, seed=0):
    """Gaussian blobs whose centres are far apart relative to sigma."""
    rng = np.random.default_rng(seed)
    centres = np.zeros((k, d))
    for i in range(k):
        centres[i, i % d] = 8.0 * sigma * (1 if i < d else -1)
    labels = np.arange(n) % k
    X = centres[labels] + sigma * rng.normal(size=(n, d))
    classes = [M1, M2, M3, M4][:k]
    return X, [classes[i] for i in labels]


def standardised(X, labels, cfg=SvmConfig()):
    scaler = fit_scaler(X)
    return train_svm((scaler.transform(X), labels), cfg, scaler)


def test_two_point_boundary(backend):
    model = train_svm((np.array([[-1.0], [1.0]]), [M1, M2]), SvmConfig(c=1e3))
    # boundary where the two class scores meet
    dw = model.weights[1, 0] - model.weights[0, 0]
    db = model.biases[1] - model.biases[0]
    assert abs(-db / dw) < 0.1
    assert model.predict(np.array([[-1.0], [1.0]])) == [M1, M2]


def test_separable_blobs_reach_full_accuracy(backend):
    X, y = blobs()
    model = standardised(X, y)
    assert model.predict(X) == y
    assert all(r.converged for r in model.training)
    for x, label in zip(X[:20], y[:20]):
        assert predict_svm(model, x)[0] is label


def test_kkt_conditions_hold(backend):
    X, y = blobs(seed=3, sigma=2.5)  # overlapping blobs exercise both alpha bounds
    scaler = fit_scaler(X)
    Z = scaler.transform(X)
    cfg = SvmConfig(c=0.5, tolerance=1e-3)
    model = train_svm((Z, y), cfg, scaler)
    lab = np.array([c.order for c in y])
    for k, cls in enumerate(model.classes):
        yk = np.where(lab == cls.order, 1.0, -1.0)
        r = model.training[k]
        margins = yk * (Z @ r.w + r.b)
        assert np.all((r.alpha >= 0) & (r.alpha <= cfg.c))
        assert np.all(margins[r.alpha <= 0] >= 1 - cfg.tolerance)
        assert np.all(margins[r.alpha >= cfg.c] <= 1 + cfg.tolerance)
        assert kkt_violation(margins, r.alpha, cfg.c).max() <= cfg.tolerance
        # w is the alpha-weighted sum of the training points
        np.testing.assert_allclose(r.w, (r.alpha * yk) @ Z, atol=1e-9)


def test_dual_objective_non_decreasing(backend):
    X, y = blobs(seed=5, sigma=2.0)
    Z = fit_scaler(X).transform(X)
    yk = np.where(np.array([c is M1 for c in y]), 1.0, -1.0)
    r = solve_binary(Z, yk, 1.0, 1e-4, rng=np.random.default_rng(0))
    assert np.all(np.diff(r.objective) >= -1e-9)


def test_duplicated_data_same_predictions():
    X, y = blobs(seed=7)
    m1 = standardised(X, y)
    m2 = standardised(np.vstack([X, X]), y + y)
    probe = np.random.default_rng(1).normal(scale=8, size=(300, X.shape[1]))
    assert m1.predict(probe) == m2.predict(probe)


def test_deterministic_serialisation():
    X, y = blobs(seed=2, sigma=2.0)
    a = serialize_svm(standardised(X, y, SvmConfig(seed=4)))
    b = serialize_svm(standardised(X, y, SvmConfig(seed=4)))
    assert a == b


def test_round_trip_preserves_predictions():
    X, y = blobs(seed=9)
    model = standardised(X, y)
    back = read_svm(serialize_svm(model))
    assert back.classes == model.classes
    np.testing.assert_array_equal(back.decision_function(X), model.decision_function(X))


def test_constructed_scores_and_ties():
    scaler = Scaler(np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    model = SvmModel([M1, M2, M3], np.zeros((3, 2)), np.array([1.0, 0.0, 0.0]), scaler)
    assert predict_svm(model, np.array([1.0, 2.0]))[0] is M1
    tied = SvmModel([M2, M3], np.zeros((2, 2)), np.zeros(2), scaler)
    assert predict_svm(tied, np.array([5.0, -1.0]))[0] is M2


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 2**32 - 1))
def test_argmax_scale_invariant(scale, seed):
    rng = np.random.default_rng(seed)
    W, b = rng.normal(size=(4, 5)), rng.normal(size=4)
    X = rng.normal(size=(50, 5))
    ident = Scaler.identity(5)
    a = SvmModel([M1, M2, M3, M4], W, b, ident).predict(X)
    c = SvmModel([M1, M2, M3, M4], W * scale, b * scale, ident).predict(X)
    assert a == c


def test_errors():
    with pytest.raises(DataError):
        train_svm((np.zeros((3, 2)), [M1, M1, M1]))
    with pytest.raises(DataError):
        train_svm([])
    with pytest.raises(ConfigError):
        SvmConfig(c=0)
    model = train_svm((np.array([[0.0], [1.0]]), [M1, M2]))
    with pytest.raises(ShapeMismatch):
        predict_svm(model, np.zeros(3))


def test_feature_vector_input():
    X, y = blobs(n=40, seed=1)
    vs = [FeatureVector(x, label) for x, label in zip(fit_scaler(X).transform(X), y)]
    model = train_svm(vs)
    assert model.predict(fit_scaler(X).transform(X)) == y


def test_backends_give_identical_models():
    from wristarc import _kernels

    backends = _kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    X, y = blobs(seed=4, sigma=2.0)
    Z = fit_scaler(X).transform(X)
    yk = np.where(np.array([c is M2 for c in y]), 1.0, -1.0)
    results = {}
    for name, mod in backends.items():
        orig = _kernels.dcd_epoch
        _kernels.dcd_epoch = mod.dcd_epoch
        try:
            results[name] = solve_binary(Z, yk, 1.0, 1e-3, rng=np.random.default_rng(0))
        finally:
            _kernels.dcd_epoch = orig
    assert results["python"].epochs == results["cython"].epochs
    np.testing.assert_allclose(results["python"].w, results["cython"].w, atol=1e-10)
