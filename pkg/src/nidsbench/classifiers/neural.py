"""One-hidden-layer perceptron trained by backprop, and an extreme learning machine."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .base import ClassifierError, register


def init_mlp(d: int, hidden: int, rng: np.random.Generator) -> dict:
    a1 = np.sqrt(6.0 / (d + hidden))
    a2 = np.sqrt(6.0 / (hidden + 1))
    return {
        "W1": rng.uniform(-a1, a1, size=(d, hidden)),
        "b1": np.zeros(hidden),
        "W2": rng.uniform(-a2, a2, size=hidden),
        "b2": np.zeros(1),
    }


def mlp_forward(params, X):
    h = expit(X @ params["W1"] + params["b1"])
    out = expit(h @ params["W2"] + params["b2"][0])
    return h, out


def mlp_loss_and_grads(params, X, y):
    """Mean binary cross-entropy and its gradient w.r.t. every parameter."""
    h, out = mlp_forward(params, X)
    eps = 1e-12
    loss = -np.mean(y * np.log(out + eps) + (1 - y) * np.log(1 - out + eps))
    n = X.shape[0]
    delta_out = (out - y) / n
    grad_hidden = np.outer(delta_out, params["W2"]) * h * (1.0 - h)
    grads = {
        "W2": h.T @ delta_out,
        "b2": np.array([delta_out.sum()]),
        "W1": X.T @ grad_hidden,
        "b1": grad_hidden.sum(axis=0),
    }
    return loss, grads


def _mlp_fit(X, y, hp, seed):
    rng = np.random.default_rng(seed)
    params = init_mlp(X.shape[1], int(hp["hidden"]), rng)
    yf = y.astype(np.float64)
    lr = float(hp["learning_rate"])
    batch = int(hp["batch_size"])
    n = X.shape[0]
    for epoch in range(int(hp["epochs"])):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            idx = perm[start:start + batch]
            loss, grads = mlp_loss_and_grads(params, X[idx], yf[idx])
            total += loss * idx.size
            for k in params:
                params[k] -= lr * grads[k]
        if not np.isfinite(total):
            raise ClassifierError(f"mlp: non-finite loss at epoch {epoch + 1}")
    return params


def _mlp_score(params, X, hp):
    return mlp_forward(params, X)[1]


register("mlp")((_mlp_fit, _mlp_score))


def elm_hidden(params, X):
    return expit(X @ params["W"] + params["b"])


def _elm_fit(X, y, hp, seed):
    rng = np.random.default_rng(seed)
    L = int(hp["hidden"])
    W = rng.uniform(-1.0, 1.0, size=(X.shape[1], L))
    b = rng.uniform(-1.0, 1.0, size=L)
    H = expit(X @ W + b)
    T = np.where(y == 1, 1.0, -1.0)
    A = H.T @ H + float(hp["ridge"]) * np.eye(L)
    rhs = H.T @ T
    beta = np.linalg.solve(A, rhs)
    # Two rounds of iterative refinement tighten the normal-equation residual.
    for _ in range(2):
        beta = beta + np.linalg.solve(A, rhs - A @ beta)
    if not np.isfinite(beta).all():
        raise ClassifierError("elm: output weights are not finite")
    return {"W": W, "b": b, "beta": beta}


def _elm_score(params, X, hp):
    return elm_hidden(params, X) @ params["beta"]


register("elm")((_elm_fit, _elm_score))
