import math

import numpy as np
import pytest
from scipy.special import expit

from nidsbench.classifiers import (
    KINDS,
    ClassifierError,
    ClassifierSpec,
    SpecError,
    fit_model,
)
from nidsbench.classifiers.ensemble import logitboost_rounds, staged_margins
from nidsbench.classifiers.neighbors import nearest_neighbors
from nidsbench.classifiers.neural import elm_hidden, init_mlp, mlp_loss_and_grads
from nidsbench.classifiers.persist import load_model, save_model
from nidsbench.classifiers.tree import (
    best_split,
    build_tree,
    apply_trees,
    gini_impurity,
    weighted_resample,
)

# Small settings so the whole matrix of kinds stays quick.
FAST = {
    "linear_svm": {"epochs": 5},
    "mlp": {"epochs": 60, "batch_size": 16},
    "elm": {"hidden": 20},
    "random_forest": {"n_trees": 8},
    "bagging_trees": {"n_trees": 8},
    "adaboost": {"rounds": 15},
    "rusboost": {"rounds": 15},
    "logitboost": {"rounds": 15},
}


def spec(kind, seed=0, **hp):
    return ClassifierSpec(kind, {**FAST.get(kind, {}), **hp}, seed)


# --- tree core ---------------------------------------------------------------

def test_gini_values():
    assert gini_impurity([0, 0, 1, 1]) == pytest.approx(0.5)
    assert gini_impurity([1, 1, 1]) == 0.0
    assert gini_impurity([0, 1], [3.0, 1.0]) == pytest.approx(1 - 0.75 ** 2 - 0.25 ** 2)


def test_best_split_perfect_threshold():
    X = np.array([[1.0], [2.0], [3.0], [4.0]])
    s = best_split(X, [0, 0, 1, 1])
    assert s.feature == 0 and s.threshold == 2.5 and s.gain == pytest.approx(0.5)


def test_best_split_ties_pick_lowest_feature():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    assert best_split(X, [0, 0, 1, 1]).feature == 0


def test_best_split_none_when_pure_or_constant():
    assert best_split(np.array([[1.0], [2.0]]), [1, 1]) is None
    assert best_split(np.array([[5.0], [5.0]]), [0, 1]) is None


def test_xor_zero_gain_plateau():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.int8)
    assert best_split(X, y) is None
    assert best_split(X, y, allow_zero_gain=True) is not None
    model = fit_model(ClassifierSpec("decision_tree", {"max_depth": 2}, 0), X, y)
    assert np.array_equal(model.predict_labels(X), y)


def test_tree_min_leaf_and_depth():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 3))
    y = (rng.random(200) < 0.5).astype(np.int8)
    stump = build_tree(X, y, max_depth=1)
    assert stump["feature"].size <= 3
    deep = build_tree(X, y)
    assert np.all((apply_trees(deep, X) > 0.5) == (y == 1))


def test_weighted_resample():
    rows = np.arange(4)
    drawn = weighted_resample(rows, [0.0, 1.0, 0.0, 3.0], 4000, seed=1)
    assert set(np.unique(drawn)) == {1, 3}
    assert np.mean(drawn == 3) == pytest.approx(0.75, abs=0.03)
    assert np.array_equal(drawn, weighted_resample(rows, [0.0, 1.0, 0.0, 3.0], 4000, seed=1))
    with pytest.raises(ValueError):
        weighted_resample(rows, np.zeros(4), 3, 0)


# --- per-kind oracles --------------------------------------------------------

def test_naive_bayes_hand_posterior():
    X = np.array([[1.0, 2.0], [2.0, 1.0], [3.0, 3.0], [6.0, 5.0], [7.0, 7.0], [8.0, 6.0]])
    y = np.array([0, 0, 0, 1, 1, 1], dtype=np.int8)
    model = fit_model(ClassifierSpec("naive_bayes", {}, 0), X, y)
    probe = np.array([[4.0, 4.0], [2.0, 2.5]])

    def log_lik(x, rows):
        mu, var = rows.mean(axis=0), rows.var(axis=0)
        return np.sum(-0.5 * np.log(2 * np.pi * var) - (x - mu) ** 2 / (2 * var))

    for x, got in zip(probe, model.predict_scores(probe)):
        l0 = math.log(0.5) + log_lik(x, X[:3])
        l1 = math.log(0.5) + log_lik(x, X[3:])
        assert got == pytest.approx(1 / (1 + math.exp(l0 - l1)), abs=1e-9)


def test_knn_self_prediction(blobs):
    X, y = blobs
    model = fit_model(ClassifierSpec("knn", {"k": 1}, 0), X, y)
    assert np.array_equal(model.predict_labels(X), y)


def test_knn_matches_exhaustive_search():
    rng = np.random.default_rng(42)
    for _ in range(200):
        n, d = int(rng.integers(5, 101)), int(rng.integers(1, 6))
        k = int(rng.integers(1, min(n, 7) + 1))
        # integer coordinates plant exact distance ties
        train = rng.integers(-3, 4, size=(n, d)).astype(float)
        queries = rng.integers(-3, 4, size=(4, d)).astype(float)
        got = nearest_neighbors(train, queries, k, chunk_rows=3)
        for q, row in zip(queries, got):
            dist = ((train - q) ** 2).sum(axis=1)
            expect = np.lexsort((np.arange(n), dist))[:k]
            assert np.array_equal(row, expect)


def test_linear_svm_separable(blobs):
    X, y = blobs
    model = fit_model(ClassifierSpec("linear_svm", {}, 3), X, y)
    assert np.mean(model.predict_labels(X) == y) >= 0.99


def test_mlp_gradient_check():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 3))
    y = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    params = init_mlp(3, 4, rng)
    _, grads = mlp_loss_and_grads(params, X, y)
    h = 1e-5
    for name, value in params.items():
        for idx in np.ndindex(value.shape):
            old = value[idx]
            value[idx] = old + h
            up, _ = mlp_loss_and_grads(params, X, y)
            value[idx] = old - h
            down, _ = mlp_loss_and_grads(params, X, y)
            value[idx] = old
            numeric = (up - down) / (2 * h)
            exact = grads[name][idx]
            assert abs(numeric - exact) <= 1e-4 * max(abs(numeric), abs(exact), 1e-8), (name, idx)


def test_elm_normal_equations(blobs):
    X, y = blobs
    model = fit_model(ClassifierSpec("elm", {}, 9), X, y)
    H = elm_hidden(model.params, X)
    T = np.where(y == 1, 1.0, -1.0)
    A = H.T @ H + 1e-6 * np.eye(H.shape[1])
    rhs = H.T @ T
    resid = np.linalg.norm(A @ model.params["beta"] - rhs) / np.linalg.norm(rhs)
    assert resid < 1e-6


def test_adaboost_loss_bound_non_increasing():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (200, 2))
    y = ((X[:, 0] > 0) & (X[:, 1] > -0.3)).astype(np.int8)
    model = fit_model(ClassifierSpec("adaboost", {"rounds": 40}, 0), X, y)
    ys = np.where(y == 1, 1.0, -1.0)
    raw = staged_margins(model.params, X) * np.cumsum(model.params["alpha"])
    # Exponential loss bounds the training error and never rises under discrete AdaBoost.
    exp_loss = np.exp(-ys[:, None] * raw).mean(axis=0)
    assert np.all(np.diff(exp_loss) <= 1e-12)
    err = ((raw > 0) != (ys[:, None] > 0)).mean(axis=0)
    assert np.all(err <= exp_loss + 1e-12)
    assert err[-1] == 0.0


def test_adaboost_single_stump_data_stops_at_zero_error():
    X = np.arange(20, dtype=float)[:, None]
    y = (X[:, 0] >= 10).astype(np.int8)
    model = fit_model(ClassifierSpec("adaboost", {"rounds": 50}, 0), X, y)
    assert model.params["alpha"].size == 1
    assert np.array_equal(model.predict_scores(X), np.where(y == 1, 1.0, -1.0))


def test_logitboost_responses_within_clamp():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(150, 2))
    y = (X[:, 0] + 0.3 * rng.normal(size=150) > 0).astype(np.int8)
    for _, z, w in logitboost_rounds(X, y, 25, z_max=4.0, weight_floor=1e-10):
        assert np.all(np.abs(z) <= 4.0) and np.all(w >= 1e-10)


# --- uniform contract --------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_determinism_and_label_score_coherence(kind, blobs):
    X, y = blobs
    a = fit_model(spec(kind, seed=4), X, y)
    b = fit_model(spec(kind, seed=4), X, y)
    probe = np.random.default_rng(2).normal(scale=2, size=(60, 3))
    assert np.array_equal(a.predict_scores(probe), b.predict_scores(probe))
    s, lab = a.predict_scores(probe), a.predict_labels(probe)
    thr = 0.0 if kind in ("linear_svm", "elm", "adaboost", "rusboost") else 0.5
    assert np.array_equal(lab, (s > thr).astype(lab.dtype))
    assert np.mean(a.predict_labels(X) == y) > 0.9


@pytest.mark.parametrize("kind", ["naive_bayes", "lda", "knn", "decision_tree", "elm"])
def test_permutation_invariance(kind, blobs):
    X, y = blobs
    perm = np.random.default_rng(3).permutation(len(y))
    probe = np.random.default_rng(4).normal(scale=2, size=(50, 3))
    a = fit_model(spec(kind), X, y).predict_labels(probe)
    b = fit_model(spec(kind), X[perm], y[perm]).predict_labels(probe)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", KINDS)
def test_save_load_round_trip(kind, blobs, tmp_path):
    X, y = blobs
    model = fit_model(spec(kind, seed=1), X, y)
    save_model(model, tmp_path / "m.npz")
    back = load_model(tmp_path / "m.npz")
    assert back.kind == kind
    assert np.array_equal(back.predict_scores(X), model.predict_scores(X))


def test_single_class_training_is_degenerate(blobs):
    X, _ = blobs
    model = fit_model(ClassifierSpec("decision_tree", {}, 0), X, np.ones(len(X), dtype=np.int8))
    assert model.degenerate
    assert np.all(model.predict_labels(X) == 1)


def test_spec_and_input_validation(blobs):
    X, y = blobs
    with pytest.raises(SpecError):
        ClassifierSpec("decision_tree", {"depth": 3}, 0)
    with pytest.raises(SpecError):
        ClassifierSpec("svm_rbf", {}, 0)
    model = fit_model(ClassifierSpec("lda", {}, 0), X, y)
    with pytest.raises(ClassifierError):
        model.predict_scores(X[:, :2])
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises((ClassifierError, ValueError)):
        fit_model(ClassifierSpec("lda", {}, 0), bad, y)


def test_knn_has_no_training_cost(blobs):
    X, y = blobs
    assert fit_model(ClassifierSpec("knn", {}, 0), X, y).train_seconds < 0.1


def test_logitboost_score_is_probability(blobs):
    X, y = blobs
    s = fit_model(spec("logitboost"), X, y).predict_scores(X)
    assert np.all((s >= 0) & (s <= 1))
    assert expit(0.0) == 0.5
