"""PCA by cyclic Jacobi rotations, loading-based feature ranking, and the
top-m / k-component selection grid validated with a decision tree."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataset import EncodedDataset, SchemaError, apply_feature_policy, stratified_indices

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10
NEGATIVE_EIG_TOL = 1e-10


class EigenError(ArithmeticError):
    """Eigendecomposition failed or the input was not symmetric."""


def covariance_matrix(X) -> np.ndarray:
    """Sample covariance (divisor ``n - 1``) of the columns of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("covariance needs at least two rows")
    centred = X - X.mean(axis=0)
    S = centred.T @ centred / (X.shape[0] - 1)
    return 0.5 * (S + S.T)


def _offdiag_norm(A) -> float:
    # Summing the off-diagonal squares directly; sum(A*A) - sum(diag^2) cancels badly.
    return float(np.linalg.norm(A[~np.eye(A.shape[0], dtype=bool)]))


def sym_eigen(S, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS):
    """Eigenvalues (descending) and orthonormal eigenvectors of symmetric ``S``.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive. Converged when the off-diagonal Frobenius norm drops to
    ``tol * ||S||_F``.
    """
    A = np.array(S, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EigenError("matrix must be square")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise EigenError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    d = A.shape[0]
    V = np.eye(d)
    target = tol * max(np.linalg.norm(A), np.finfo(float).tiny)
    off = _offdiag_norm(A)
    sweeps = 0
    while off > target:
        if sweeps >= max_sweeps:
            raise EigenError(f"Jacobi did not converge in {max_sweeps} sweeps; off-diagonal norm {off:.3e}")
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-150 * max(abs(diff), 1.0):
                    # Negligible coupling; rotating would only overflow theta.
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
        off = _offdiag_norm(A)
    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues, V = eigenvalues[order], V[:, order]
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(d)])
    signs[signs == 0] = 1.0
    return eigenvalues, V * signs


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    fitted_column_ids: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return self.mean.size

    def explained_ratio(self) -> np.ndarray:
        """Cumulative share of total variance captured by the first k components."""
        total = self.eigenvalues.sum()
        return np.cumsum(self.eigenvalues) / total if total > 0 else np.ones(self.dimension)


def fit_pca(X, column_ids: Sequence[str]) -> PcaModel:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(column_ids):
        raise SchemaError("column ids do not match matrix width")
    S = covariance_matrix(X)
    eigenvalues, V = sym_eigen(S)
    if eigenvalues.min(initial=0.0) < -NEGATIVE_EIG_TOL * max(1.0, np.abs(eigenvalues).max()):
        raise EigenError(f"covariance has a negative eigenvalue {eigenvalues.min():.3e}")
    eigenvalues = np.maximum(eigenvalues, 0.0)
    mean = X.mean(axis=0)
    for arr in (mean, eigenvalues, V):
        arr.setflags(write=False)
    return PcaModel(mean, eigenvalues, V, tuple(column_ids))


def transform(model: PcaModel, X, k: int, column_ids: Sequence[str] | None = None) -> np.ndarray:
    """Project onto the first ``k`` components: ``(X - mean) @ V[:, :k]``."""
    X = np.asarray(X, dtype=np.float64)
    if column_ids is not None and tuple(column_ids) != model.fitted_column_ids:
        raise SchemaError("columns differ from those the PCA model was fitted on")
    if X.ndim != 2 or X.shape[1] != model.dimension:
        raise SchemaError(f"expected {model.dimension} columns")
    if not 1 <= k <= model.dimension:
        raise ValueError(f"k must be in [1, {model.dimension}], got {k}")
    return (X - model.mean) @ model.eigenvectors[:, :k]


WEIGHTINGS = ("eigenvalue_weighted", "max_abs")


@dataclass(frozen=True)
class FeatureRanking:
    entries: tuple[tuple[str, float], ...]
    weighting: str
    top_components: int

    def top(self, m: int) -> list[str]:
        return [fid for fid, _ in self.entries[:m]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature_id", "score"])
        for fid, score in self.entries:
            writer.writerow([fid, repr(score)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "weighting": self.weighting,
            "top_components": self.top_components,
            "ranking": [{"feature_id": f, "score": s} for f, s in self.entries],
        }


def _feature_number(column_id: str) -> int:
    """Numeric part of an ``F<n>`` id (one-hot ``F3=http`` maps to 3); large if absent."""
    base = column_id.split("=", 1)[0]
    return int(base[1:]) if base[:1] == "F" and base[1:].isdigit() else 1 << 30


def rank_features(model: PcaModel, weighting: str = "eigenvalue_weighted", top_components: int = 10) -> FeatureRanking:
    """Score each input feature by its loadings on the leading components.

    ``eigenvalue_weighted``: sum over components j of ``lambda_j * |V_ij|``.
    ``max_abs``: max over components of ``|V_ij|``.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    top = min(int(top_components), model.dimension)
    if top < 1:
        raise ValueError("top_components must be at least 1")
    loadings = np.abs(model.eigenvectors[:, :top])
    if weighting == "eigenvalue_weighted":
        scores = loadings @ model.eigenvalues[:top]
    else:
        scores = loadings.max(axis=1)
    ids = model.fitted_column_ids
    order = sorted(range(model.dimension), key=lambda i: (-scores[i], _feature_number(ids[i]), i))
    entries = tuple((model.fitted_column_ids[i], float(scores[i])) for i in order)
    return FeatureRanking(entries, weighting, top)


@dataclass(frozen=True)
class SelectionGrid:
    accuracy: dict  # (m, k) -> accuracy on the holdout
    seed: int
    holdout_ratio: float

    def cells(self) -> list[tuple[int, int, float]]:
        return [(m, k, a) for (m, k), a in sorted(self.accuracy.items())]

    def best(self) -> tuple[int, int, float]:
        return max(self.cells(), key=lambda c: (c[2], -c[0], -c[1]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "k", "accuracy"])
        for m, k, a in self.cells():
            writer.writerow([m, k, f"{a:.6f}"])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "holdout_ratio": self.holdout_ratio,
            "cells": [{"m": m, "k": k, "accuracy": a} for m, k, a in self.cells()],
        }


def select_and_project(train: EncodedDataset, feature_ids: Sequence[str], k: int):
    """Fit PCA on the given columns of ``train``; return (model, projected matrix)."""
    sub = apply_feature_policy(train, list(feature_ids))
    model = fit_pca(sub.matrix, sub.column_ids)
    return model, transform(model, sub.matrix, k)


def validate_selection(
    train: EncodedDataset,
    m_range: Iterable[int],
    k_range: Iterable[int],
    seed: int = 0,
    weighting: str = "eigenvalue_weighted",
    top_components: int = 10,
    holdout_ratio: float = 0.3,
    workers: int = 1,
    tree_params: dict | None = None,
) -> SelectionGrid:
    """Decision-tree holdout accuracy for every (top-m features, k components) pair with k <= m.

    Features are ranked, and PCA fitted, on the full training matrix (both
    unsupervised); every cell then uses the same stratified split drawn from
    ``seed``.
    """
    from .classifiers import ClassifierSpec, fit_model

    d = train.n_features
    m_values = sorted(set(int(m) for m in m_range))
    k_values = sorted(set(int(k) for k in k_range))
    if not m_values or m_values[0] < 2 or m_values[-1] > d:
        raise ValueError(f"m_range must lie within [2, {d}]")
    ranking = rank_features(fit_pca(train.matrix, train.column_ids), weighting, top_components)
    fit_rows, hold_rows = stratified_indices(train.labels, 1.0 - holdout_ratio, seed)

    def cell_spec(m, k):
        # Per-cell stream from (seed, m, k): results do not depend on scheduling.
        state = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, m, k]).generate_state(1)[0]
        return ClassifierSpec("decision_tree", tree_params or {}, int(state))

    def run_m(m):
        _, full = select_and_project(train, ranking.top(m), m)
        out = {}
        for k in k_values:
            if k > m:
                continue
            Z = full[:, :k]
            tree = fit_model(cell_spec(m, k), Z[fit_rows], train.labels[fit_rows])
            pred = tree.predict_labels(Z[hold_rows])
            out[(m, k)] = float(np.mean(pred == train.labels[hold_rows]))
        return out

    accuracy: dict = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(run_m, m_values):
                accuracy.update(part)
    else:
        for m in m_values:
            accuracy.update(run_m(m))
    return SelectionGrid(accuracy, int(seed), float(holdout_ratio))
