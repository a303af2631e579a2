"""Decision tree, bagged/random-forest trees and the three boosting schemes."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from .base import register
from .tree import (
    PresortedStumps,
    apply_trees,
    build_tree,
    concat_trees,
    undersample_majority,
    weighted_resample,
)


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _dt_fit(X, y, hp, seed):
    return build_tree(X, y, max_depth=hp["max_depth"], min_leaf=hp["min_leaf"], seed=seed)


def _dt_score(params, X, hp):
    return apply_trees(params, X, vote=False)


register("decision_tree")((_dt_fit, _dt_score))


def _bootstrap_forest(X, y, hp, seed, max_features):
    n = X.shape[0]
    rows = np.arange(n)
    uniform = np.ones(n)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(int(hp["n_trees"])):
        boot_seq, tree_seq = child.spawn(2)
        drawn = weighted_resample(rows, uniform, n, _seed_int(boot_seq))
        counts = np.bincount(drawn, minlength=n).astype(np.float64)
        trees.append(build_tree(X, y, counts, hp["max_depth"], hp["min_leaf"], max_features,
                                _seed_int(tree_seq)))
    return concat_trees(trees)


def _rf_fit(X, y, hp, seed):
    return _bootstrap_forest(X, y, hp, seed, math.ceil(math.sqrt(X.shape[1])))


def _bag_fit(X, y, hp, seed):
    return _bootstrap_forest(X, y, hp, seed, None)


def _vote_score(params, X, hp):
    return apply_trees(params, X, vote=True)


register("random_forest")((_rf_fit, _vote_score))
register("bagging_trees")((_bag_fit, _vote_score))


def _stump_votes(params, X):
    """(n, rounds) matrix of +-1 stump outputs."""
    cols = X[:, params["feature"]]
    go_left = cols <= params["threshold"]
    return np.where(go_left, params["left"], params["right"])


def _adaboost(X, y, rounds, seed, undersample):
    ys = np.where(y == 1, 1.0, -1.0)
    n = X.shape[0]
    w = np.full(n, 1.0 / n)
    stumps = PresortedStumps(X)
    round_seeds = np.random.SeedSequence(seed).spawn(rounds)
    feats, thrs, lefts, rights, alphas = [], [], [], [], []
    for t in range(rounds):
        if undersample:
            idx = undersample_majority(y, w, _seed_int(round_seeds[t]))
            fit_w = np.bincount(idx, weights=w[idx], minlength=n)
        else:
            fit_w = w
        stump = stumps.gini_stump(y, fit_w)
        if stump is None:
            break
        f, thr, lv, rv = stump
        lvote = 1.0 if lv > 0.5 else -1.0
        rvote = 1.0 if rv > 0.5 else -1.0
        h = np.where(X[:, f] <= thr, lvote, rvote)
        err = float(w[h != ys].sum())
        if err >= 0.5:
            if not alphas:
                # Nothing better than chance: keep the stump as a tie-breaker only.
                feats.append(f); thrs.append(thr); lefts.append(lvote); rights.append(rvote)
                alphas.append(1e-10)
            break
        err_c = max(err, 1e-10)
        alpha = 0.5 * math.log((1.0 - err_c) / err_c)
        feats.append(f); thrs.append(thr); lefts.append(lvote); rights.append(rvote)
        alphas.append(alpha)
        if err == 0.0:
            break
        w = w * np.exp(-alpha * ys * h)
        w /= w.sum()
    if not alphas:
        majority = 1.0 if ys.sum() > 0 else -1.0
        feats, thrs, lefts, rights, alphas = [0], [np.inf], [majority], [majority], [1.0]
    return {
        "feature": np.array(feats, dtype=np.int64),
        "threshold": np.array(thrs, dtype=np.float64),
        "left": np.array(lefts, dtype=np.float64),
        "right": np.array(rights, dtype=np.float64),
        "alpha": np.array(alphas, dtype=np.float64),
    }


def staged_margins(params, X) -> np.ndarray:
    """Normalized ensemble margin after each round, shape (n, rounds)."""
    votes = _stump_votes(params, X)
    num = np.cumsum(votes * params["alpha"], axis=1)
    return num / np.cumsum(params["alpha"])


def _ada_fit(X, y, hp, seed):
    return _adaboost(X, y, int(hp["rounds"]), seed, undersample=False)


def _rus_fit(X, y, hp, seed):
    return _adaboost(X, y, int(hp["rounds"]), seed, undersample=True)


def _ada_score(params, X, hp):
    votes = _stump_votes(params, X)
    return votes @ params["alpha"] / params["alpha"].sum()


register("adaboost")((_ada_fit, _ada_score))
register("rusboost")((_rus_fit, _ada_score))


def logitboost_rounds(X, y, rounds, z_max=4.0, weight_floor=1e-10):
    """Yield ``(stump, z, w)`` per round of two-class LogitBoost.

    ``stump`` is ``(feature, threshold, left_value, right_value)`` fitted by
    weighted least squares to the clamped working responses ``z``.
    """
    stumps = PresortedStumps(X)
    F = np.zeros(X.shape[0])
    yf = y.astype(np.float64)
    for _ in range(rounds):
        p = expit(2.0 * F)
        w = np.maximum(p * (1.0 - p), weight_floor)
        z = np.clip((yf - p) / w, -z_max, z_max)
        stump = stumps.regression_stump(z, w)
        f, thr, lv, rv = stump
        F += 0.5 * np.where(X[:, f] <= thr, lv, rv)
        yield stump, z, w


def _logit_fit(X, y, hp, seed):
    rows = [s for s, _, _ in logitboost_rounds(X, y, int(hp["rounds"]), float(hp["z_max"]),
                                               float(hp["weight_floor"]))]
    return {
        "feature": np.array([r[0] for r in rows], dtype=np.int64),
        "threshold": np.array([r[1] for r in rows], dtype=np.float64),
        "left": np.array([r[2] for r in rows], dtype=np.float64),
        "right": np.array([r[3] for r in rows], dtype=np.float64),
    }


def _logit_score(params, X, hp):
    F = 0.5 * _stump_votes(params, X).sum(axis=1)
    return expit(2.0 * F)


register("logitboost")((_logit_fit, _logit_score))
