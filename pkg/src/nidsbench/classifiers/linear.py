"""Gaussian naive Bayes, linear discriminant analysis and a Pegasos linear SVM."""

from __future__ import annotations

import numba
import numpy as np
from scipy.special import expit

from .base import ClassifierError, register


def _nb_fit(X, y, hp, seed):
    floor = hp["var_smoothing"] * float(X.var(axis=0).max())
    means, variances, log_priors = [], [], []
    for cls in (0, 1):
        Xc = X[y == cls]
        means.append(Xc.mean(axis=0))
        variances.append(np.maximum(Xc.var(axis=0), floor) if floor > 0 else Xc.var(axis=0))
        log_priors.append(np.log(Xc.shape[0] / X.shape[0]))
    variances = np.array(variances)
    # A column constant in both classes carries no evidence.
    variances[variances <= 0] = 1.0
    return {"means": np.array(means), "variances": variances, "log_priors": np.array(log_priors)}


def nb_log_joint(params, X) -> np.ndarray:
    """Per-class log p(x, c), shape (n, 2)."""
    out = np.empty((X.shape[0], 2))
    for c in (0, 1):
        mu, var = params["means"][c], params["variances"][c]
        out[:, c] = params["log_priors"][c] - 0.5 * np.sum(
            np.log(2.0 * np.pi * var) + (X - mu) ** 2 / var, axis=1
        )
    return out


def _nb_score(params, X, hp):
    lj = nb_log_joint(params, X)
    return expit(lj[:, 1] - lj[:, 0])


register("naive_bayes")((_nb_fit, _nb_score))


def _lda_fit(X, y, hp, seed):
    n, d = X.shape
    mu0, mu1 = X[y == 0].mean(axis=0), X[y == 1].mean(axis=0)
    centred = np.where((y == 1)[:, None], X - mu1, X - mu0)
    cov = centred.T @ centred / max(n - 2, 1)
    ridge = hp["shrinkage"] * (np.trace(cov) / d if np.trace(cov) > 0 else 1.0)
    cov = cov + ridge * np.eye(d)
    weights = np.linalg.solve(cov, mu1 - mu0)
    pi1 = np.mean(y == 1)
    bias = -0.5 * (mu1 + mu0) @ weights + np.log(pi1 / (1.0 - pi1))
    return {"weights": weights, "bias": np.array([bias])}


def _lda_score(params, X, hp):
    return expit(X @ params["weights"] + params["bias"][0])


register("lda")((_lda_fit, _lda_score))


@numba.njit(cache=True, nogil=True)
def _pegasos_epoch(Xa, ys, perm, w, lam, t0):
    radius = 1.0 / np.sqrt(lam)
    t = t0
    for idx in perm:
        t += 1
        eta = 1.0 / (lam * t)
        margin = ys[idx] * np.dot(w, Xa[idx])
        w *= 1.0 - eta * lam
        if margin < 1.0:
            w += eta * ys[idx] * Xa[idx]
        norm = np.sqrt(np.dot(w, w))
        if norm > radius:
            w *= radius / norm
    return t


def _svm_fit(X, y, hp, seed):
    lam = float(hp["lam"])
    Xa = np.ascontiguousarray(np.column_stack([X, np.ones(X.shape[0])]))
    ys = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(Xa.shape[1])
    rng = np.random.default_rng(seed)
    t = 0
    for epoch in range(int(hp["epochs"])):
        t = _pegasos_epoch(Xa, ys, rng.permutation(X.shape[0]), w, lam, t)
        loss = 0.5 * lam * w @ w + np.mean(np.maximum(0.0, 1.0 - ys * (Xa @ w)))
        if not np.isfinite(loss):
            raise ClassifierError(f"linear_svm: non-finite objective at epoch {epoch + 1}")
    return {"weights": w[:-1].copy(), "bias": w[-1:].copy()}


def _svm_score(params, X, hp):
    return X @ params["weights"] + params["bias"][0]


register("linear_svm")((_svm_fit, _svm_score))
