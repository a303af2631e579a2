import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nidsbench.dataset import apply_feature_policy, fit_standardizer
from nidsbench.pca_select import (
    EigenError,
    covariance_matrix,
    fit_pca,
    rank_features,
    sym_eigen,
    transform,
    validate_selection,
)


def test_covariance_matches_numpy():
    X = np.random.default_rng(1).normal(size=(50, 4))
    assert np.allclose(covariance_matrix(X), np.cov(X, rowvar=False), atol=1e-14)
    with pytest.raises(ValueError):
        covariance_matrix(X[:1])


def test_eigen_diagonal_and_2x2():
    vals, vecs = sym_eigen(np.diag([1.0, 3.0, 2.0]))
    assert vals.tolist() == [3.0, 2.0, 1.0]
    vals, vecs = sym_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(vals, [3.0, 1.0], atol=1e-14)
    assert np.allclose(vecs[:, 0], [2 ** -0.5, 2 ** -0.5], atol=1e-12)


def test_eigen_rejects_asymmetric():
    with pytest.raises(EigenError):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eigen_sign_convention():
    S = np.random.default_rng(3).normal(size=(6, 6))
    _, V = sym_eigen(S + S.T)
    for j in range(6):
        assert V[np.argmax(np.abs(V[:, j])), j] > 0


def test_eigen_matches_numpy_eigh():
    S = np.random.default_rng(4).normal(size=(12, 12))
    S = S @ S.T
    vals, _ = sym_eigen(S)
    assert np.allclose(vals, np.linalg.eigvalsh(S)[::-1], atol=1e-10 * np.abs(S).max())


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31 - 1))
def test_eigen_properties(d, seed):
    A = np.random.default_rng(seed).normal(size=(d, d))
    S = A + A.T
    vals, V = sym_eigen(S)
    assert np.abs(V.T @ V - np.eye(d)).max() <= 1e-8
    assert np.abs(S @ V - V * vals).max() <= 1e-7 * np.abs(S).sum(axis=1).max()
    assert abs(vals.sum() - np.trace(S)) <= 1e-8 * max(1.0, abs(np.trace(S)))
    assert np.all(np.diff(vals) <= 0)


def test_pca_projection_and_variance():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(300, 2)) @ np.array([[3.0, 0.0], [1.0, 0.5]])
    model = fit_pca(X, ["a", "b"])
    Z = transform(model, X, 2)
    assert np.allclose(Z.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(np.var(Z, axis=0, ddof=1), model.eigenvalues, rtol=1e-10)
    assert model.explained_ratio()[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        transform(model, X, 2, column_ids=["b", "a"])


def test_rank_features_weightings():
    rng = np.random.default_rng(8)
    X = np.column_stack([10 * rng.normal(size=400), rng.normal(size=400), 0.1 * rng.normal(size=400)])
    model = fit_pca(X, ["big", "mid", "small"])
    for w in ("eigenvalue_weighted", "max_abs"):
        r = rank_features(model, w, top_components=3)
        assert [e[0] for e in r.entries][0] == "big"
        assert r.top(2)[0] == "big"
    r = rank_features(model, "eigenvalue_weighted", 10)
    scores = [s for _, s in r.entries]
    assert scores == sorted(scores, reverse=True)
    with pytest.raises(ValueError):
        rank_features(model, "bogus")


def test_selection_grid_structure(synthetic_splits):
    train, _ = synthetic_splits
    ds = apply_feature_policy(fit_standardizer(train).apply(train), "drop_content")
    grid = validate_selection(ds, [3, 4, 5], [1, 2, 3, 4, 5], seed=1)
    cells = grid.cells()
    assert {(m, k) for m, k, _ in cells} == {(m, k) for m in (3, 4, 5) for k in range(1, 6) if k <= m}
    assert all(0 <= a <= 1 for *_, a in cells)
    again = validate_selection(ds, [3, 4, 5], [1, 2, 3, 4, 5], seed=1)
    assert grid.to_csv() == again.to_csv()
    m, k, acc = grid.best()
    assert acc == max(a for *_, a in cells)


def test_duplicate_column_covariance():
    x = np.random.default_rng(2).normal(size=100)
    S = covariance_matrix(np.column_stack([x, x]))
    assert S[0, 1] == pytest.approx(S[0, 0], rel=1e-14)


def test_rank_ties_prefer_lower_feature_index():
    x = np.random.default_rng(6).normal(size=(200, 1))
    X = np.hstack([x, x])
    r = rank_features(fit_pca(X, ["F7", "F3"]), "eigenvalue_weighted", 2)
    # identical columns score identically; ties go to the lower F-number
    assert [f for f, _ in r.entries] == ["F3", "F7"]


def test_rank_invariant_under_row_permutation():
    X = np.random.default_rng(9).normal(size=(120, 5)) * [1, 2, 3, 4, 5]
    ids = [f"F{i}" for i in range(1, 6)]
    a = rank_features(fit_pca(X, ids))
    b = rank_features(fit_pca(X[np.random.default_rng(1).permutation(120)], ids))
    assert [f for f, _ in a.entries] == [f for f, _ in b.entries]
    assert np.allclose([s for _, s in a.entries], [s for _, s in b.entries], atol=1e-10)
