import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from payloadguard.detectors import (
    AutoencoderModel,
    IsolationForestModel,
    RandomForestModel,
    ScalerParams,
    ae_score,
    fit_scaler,
    if_score,
    rf_importances,
    rf_predict,
    train_autoencoder,
    train_isolation_forest,
    train_random_forest,
    transform,
)
from payloadguard.detectors.autoencoder import init_params, loss_and_grads
from payloadguard.detectors.isolation_forest import average_path_length, build_isolation_tree
from payloadguard.detectors.random_forest import build_tree

# -- scaler --


def test_scaler_constant_column_and_fit_set():
    rng = np.random.default_rng(0)
    X = np.c_[rng.normal(5, 3, 200), np.full(200, 7.0), rng.integers(0, 4, 200)]
    params = fit_scaler(X)
    Z = transform(params, X)
    assert params.std[1] == 1.0 and np.all(Z[:, 1] == 0)
    assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
    assert np.allclose(Z[:, [0, 2]].std(axis=0), 1.0, atol=1e-9)
    again = ScalerParams.from_dict(params.to_dict())
    assert np.array_equal(again.mean, params.mean) and np.array_equal(again.std, params.std)


def test_scaler_single_row_and_empty():
    row = np.ones((1, 18))
    assert np.all(transform(fit_scaler(row), row) == 0)
    with pytest.raises(ValueError):
        fit_scaler(np.zeros((0, 18)))


# -- isolation forest --


def test_average_path_length_values():
    assert average_path_length(1) == 0.0 and average_path_length(2) == 1.0
    # c(256) from the harmonic approximation, written out by hand
    assert average_path_length(256) == pytest.approx(2 * (math.log(255) + 0.5772156649015329) - 2 * 255 / 256)
    assert np.allclose(average_path_length(np.array([0, 1, 2, 3])), [0, 0, 1, 2 * (math.log(2) + 0.5772156649015329) - 4 / 3])


def test_gross_outlier_scores_higher():
    X = np.r_[np.zeros(99), [10.0]].reshape(-1, 1)
    m = train_isolation_forest(X, np.random.default_rng(1))
    assert if_score(m, [10.0]) > if_score(m, [0.0])


def test_two_point_tree_has_unit_paths():
    X = np.array([[0.0, 1.0], [3.0, -2.0]])
    tree = build_isolation_tree(X, np.random.default_rng(0), height_limit=1)
    assert np.all(tree.path_lengths(X) == 1.0)
    m = IsolationForestModel(subsample_size=2, trees=[tree])
    s = m.score(X)
    assert s[0] == s[1]


def brute_path(tree, x):
    node, h = 0, 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] < tree.threshold[node] else tree.right[node]
        h += 1
    n = int(tree.size[node])
    c = 0.0 if n <= 1 else 1.0 if n == 2 else 2 * (math.log(n - 1) + 0.5772156649015329) - 2 * (n - 1) / n
    return h + c


def test_expected_path_matches_per_tree_walk():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 3))
    m = train_isolation_forest(X, np.random.default_rng(4), n_trees=300, max_samples=256)
    assert m.subsample_size == 8 and len(m.trees) == 300
    held_out = np.array([0.2, -1.5, 3.0])
    expected = sum(brute_path(t, held_out) for t in m.trees) / 300
    assert m.expected_path_length(held_out)[0] == pytest.approx(expected, abs=1e-12)
    assert if_score(m, held_out) == pytest.approx(2 ** (-expected / average_path_length(8)), abs=1e-12)


def test_if_scores_in_open_interval_and_round_trip():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(300, 4))
    m = train_isolation_forest(X, np.random.default_rng(6), n_trees=50)
    s = m.score(np.r_[X, rng.normal(scale=20, size=(20, 4))])
    assert np.all((s > 0) & (s < 1))
    m2 = IsolationForestModel.from_dict(m.to_dict())
    assert np.array_equal(m2.score(X), m.score(X))
    with pytest.raises(ValueError):
        train_isolation_forest(X[:1], np.random.default_rng(0))


def test_if_deterministic():
    X = np.random.default_rng(7).normal(size=(100, 3))
    a = train_isolation_forest(X, np.random.default_rng(8), n_trees=20).score(X)
    b = train_isolation_forest(X, np.random.default_rng(8), n_trees=20).score(X)
    assert np.array_equal(a, b)


# -- autoencoder --


def test_gradient_check_central_differences():
    rng = np.random.default_rng(11)
    params = init_params([18, 16, 8, 16, 18], rng)
    X = rng.normal(size=(4, 18))
    _, grads = loss_and_grads(params, X)
    h = 1e-5
    for p, g in zip(params, grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up, _ = loss_and_grads(params, X)
            flat[i] = old - h
            down, _ = loss_and_grads(params, X)
            flat[i] = old
            numeric = (up - down) / (2 * h)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            assert abs(numeric - gflat[i]) / denom < 1e-4 or abs(numeric - gflat[i]) < 1e-10


def test_init_bounds():
    params = init_params([18, 16, 8, 16, 18], np.random.default_rng(0))
    for w, fan_in in zip(params[::2], (18, 16, 8, 16)):
        assert np.all(np.abs(w) <= 1 / math.sqrt(fan_in))


def test_threshold_law_and_loss_decreases():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(500, 18))
    m = train_autoencoder(X, np.random.default_rng(13), epochs=10)
    errs = m.score(X)
    assert m.threshold == np.percentile(errs, 95)
    assert int(np.sum(errs > m.threshold)) <= math.ceil(0.05 * len(X))
    assert m.loss_history[-1] < m.loss_history[0]
    assert m.adam_state["t"] == 10 * math.ceil(500 / 64)


def test_memorizes_repeated_row():
    row = np.random.default_rng(14).normal(size=18)
    X = np.tile(row, (100, 1))
    m = train_autoencoder(X, np.random.default_rng(15), epochs=300, learning_rate=1e-2)
    assert ae_score(m, row) < 1e-3


def test_zero_network_zero_row():
    params = [np.zeros_like(p) for p in init_params([18, 16, 8, 16, 18], np.random.default_rng(0))]
    m = AutoencoderModel([18, 16, 8, 16, 18], params, threshold=1.0)
    assert ae_score(m, np.zeros(18)) == 0.0


def test_ae_round_trip_and_empty():
    X = np.random.default_rng(16).normal(size=(64, 18))
    m = train_autoencoder(X, np.random.default_rng(17), epochs=2)
    m2 = AutoencoderModel.from_dict(m.to_dict())
    assert np.array_equal(m2.score(X), m.score(X)) and m2.threshold == m.threshold
    with pytest.raises(ValueError):
        train_autoencoder(np.zeros((0, 18)), np.random.default_rng(0))


# -- random forest --


def test_separable_toy_training_accuracy():
    rng = np.random.default_rng(20)
    X = rng.uniform(-1, 1, size=(240, 2))
    margin = X[:, 0] + 0.5 * X[:, 1]
    X = X[np.abs(margin) > 0.05]  # keep points off the boundary
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    m = train_random_forest(X, y, np.random.default_rng(21), n_trees=30, max_features=2)
    assert np.all(m.predict(X) == y)
    assert abs(rf_importances(m).sum() - 1.0) < 1e-9


def test_single_class_rejected():
    with pytest.raises(ValueError):
        train_random_forest(np.zeros((10, 2)), np.ones(10), np.random.default_rng(0))


def test_informative_feature_dominates_importance():
    rng = np.random.default_rng(22)
    X = rng.normal(size=(400, 4))
    y = (X[:, 2] > 0.3).astype(int)
    m = train_random_forest(X, y, np.random.default_rng(23), n_trees=40, max_features=2)
    assert int(np.argmax(m.importances)) == 2


def test_probabilities_and_calibration_sanity():
    rng = np.random.default_rng(24)
    X = rng.normal(size=(300, 5))
    y = (X[:, 0] + rng.normal(scale=0.8, size=300) > 0.5).astype(int)
    m = train_random_forest(X, y, np.random.default_rng(25), n_trees=25)
    p = m.predict_proba(X)
    assert np.all((p >= 0) & (p <= 1))
    assert p[y == 1].mean() > p[y == 0].mean()
    assert rf_predict(m, X[0]) == pytest.approx(p[0])
    m2 = RandomForestModel.from_dict(m.to_dict())
    assert np.array_equal(m2.predict_proba(X), p)


def test_constant_features_are_never_split():
    rng = np.random.default_rng(26)
    X = np.c_[np.zeros(100), rng.normal(size=100), np.ones(100)]
    y = (X[:, 1] > 0).astype(int)
    m = train_random_forest(X, y, np.random.default_rng(27), n_trees=10, max_features=1)
    for t in m.trees:
        assert set(t.feature[t.feature >= 0].tolist()) <= {1}
    assert m.importances[0] == 0 and m.importances[2] == 0


def test_tie_break_lowest_feature_then_threshold():
    # two identical columns: every split must use column 0
    x = np.arange(10, dtype=float)
    X = np.c_[x, x]
    y = (x >= 5).astype(float)
    w = np.ones(10)
    tree, _ = build_tree(X, y, w, np.ones(10), np.random.default_rng(0), max_features=2)
    assert tree.feature[0] == 0 and tree.threshold[0] == 4.5


def test_class_weights_balanced():
    rng = np.random.default_rng(28)
    X = rng.normal(size=(100, 2))
    y = np.r_[np.ones(20), np.zeros(80)]
    m = train_random_forest(X, y, np.random.default_rng(29), n_trees=3)
    assert m.class_weights == pytest.approx((100 / 160, 100 / 40))


def test_rf_deterministic():
    rng = np.random.default_rng(30)
    X = rng.normal(size=(120, 3))
    y = (X[:, 1] > 0).astype(int)
    a = train_random_forest(X, y, np.random.default_rng(31), n_trees=10).to_dict()
    b = train_random_forest(X, y, np.random.default_rng(31), n_trees=10).to_dict()
    assert a == b


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_rf_importances_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, 40)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    m = train_random_forest(X, y, np.random.default_rng(seed), n_trees=5)
    assert abs(m.importances.sum() - 1.0) < 1e-9
