"""CART core shared by the tree, forest, bagging and boosting learners.

Trees are stored as flat node arrays so that ensembles can be concatenated
and serialized without object graphs:

    feature[i]   split column, -1 for a leaf
    threshold[i] rows with x[feature] <= threshold go left
    left[i], right[i]  child node indices (global within the array set)
    value[i]     weighted attack fraction of the training rows in the node
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

GAIN_EPS = 1e-12


def gini_impurity(labels, weights=None) -> float:
    """``1 - sum_c p_c**2`` with ``p_c`` the weight share of class ``c``."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("gini impurity of an empty node is undefined")
    if weights is None:
        weights = np.ones(labels.size)
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    total = weights.sum()
    if total <= 0:
        raise ValueError("weights sum to zero")
    impurity = 1.0
    for cls in np.unique(labels):
        p = weights[labels == cls].sum() / total
        impurity -= p * p
    return float(impurity)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def _scan_feature(x, y, w, min_leaf=1):
    """Weighted Gini gains for every midpoint threshold of one column.

    Returns (gains, thresholds) in ascending threshold order.
    """
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    w1 = np.cumsum(ws * (ys == 1))
    w0 = np.cumsum(ws * (ys != 1))
    tot0, tot1 = w0[-1], w1[-1]
    total = tot0 + tot1
    boundary = np.flatnonzero(xs[1:] > xs[:-1])
    if boundary.size == 0:
        return np.empty(0), np.empty(0)
    counts_left = boundary + 1
    ok = (counts_left >= min_leaf) & (xs.size - counts_left >= min_leaf)
    boundary = boundary[ok]
    l0, l1 = w0[boundary], w1[boundary]
    r0, r1 = tot0 - l0, tot1 - l1
    wl, wr = l0 + l1, r0 + r1
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = np.where(wl > 0, 1.0 - (l0 / wl) ** 2 - (l1 / wl) ** 2, 0.0)
        gr = np.where(wr > 0, 1.0 - (r0 / wr) ** 2 - (r1 / wr) ** 2, 0.0)
    parent = 1.0 - (tot0 / total) ** 2 - (tot1 / total) ** 2
    gains = parent - (wl / total) * gl - (wr / total) * gr
    lo, hi = xs[boundary], xs[boundary + 1]
    thresholds = 0.5 * (lo + hi)
    thresholds = np.where(thresholds >= hi, lo, thresholds)
    return gains, thresholds


def best_split(X, labels, weights=None, candidate_features=None, allow_zero_gain=False):
    """Best weighted-Gini split over midpoints of consecutive distinct values.

    Ties resolve to the lowest feature index, then the lowest threshold.
    Returns ``None`` when no split improves impurity (``gain > 0``); with
    ``allow_zero_gain`` a zero-gain split on an impure node is accepted, which
    is how the tree builder gets past XOR-style plateaus.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels)
    if X.shape[0] < 2:
        return None
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if candidate_features is None:
        candidate_features = range(X.shape[1])
    best = None
    for f in sorted(candidate_features):
        gains, thresholds = _scan_feature(X[:, f], y, w)
        if gains.size == 0:
            continue
        i = int(np.argmax(gains))
        if best is None or gains[i] > best.gain:
            best = Split(int(f), float(thresholds[i]), float(gains[i]))
    if best is None:
        return None
    if best.gain > GAIN_EPS:
        return best
    if allow_zero_gain and gini_impurity(y, w) > 0:
        return best
    return None


@numba.njit(cache=True, nogil=True)
def _build_tree(X, y, w, max_depth, min_leaf, max_features, seed, allow_zero_gain):
    n, d = X.shape
    np.random.seed(seed)
    rows = np.flatnonzero(w > 0)
    m = rows.size
    order = np.empty((d, m), dtype=np.int64)
    for f in range(d):
        idx = np.argsort(X[rows, f], kind="mergesort")
        order[f, :] = rows[idx]
    buf = np.empty(m, dtype=np.int64)
    goes_left = np.zeros(n, dtype=np.bool_)

    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    sp = 0
    stack_start[0] = 0
    stack_end[0] = m
    stack_depth[0] = 0
    stack_node[0] = 0
    sp = 1
    n_nodes = 1
    features = np.arange(d)

    while sp > 0:
        sp -= 1
        start = stack_start[sp]
        end = stack_end[sp]
        depth = stack_depth[sp]
        node = stack_node[sp]

        tot0 = 0.0
        tot1 = 0.0
        for i in range(start, end):
            r = order[0, i]
            if y[r] == 1:
                tot1 += w[r]
            else:
                tot0 += w[r]
        total = tot0 + tot1
        value[node] = tot1 / total
        if tot0 == 0.0 or tot1 == 0.0 or depth >= max_depth or end - start < 2 * min_leaf:
            continue
        parent = 1.0 - (tot0 / total) ** 2 - (tot1 / total) ** 2

        if max_features < d:
            for i in range(max_features):
                j = i + np.random.randint(0, d - i)
                tmp = features[i]
                features[i] = features[j]
                features[j] = tmp
            cand = np.sort(features[:max_features].copy())
        else:
            cand = np.arange(d)

        best_gain = -1.0
        best_f = -1
        best_thr = 0.0
        for f in cand:
            l0 = 0.0
            l1 = 0.0
            for i in range(start, end - 1):
                r = order[f, i]
                if y[r] == 1:
                    l1 += w[r]
                else:
                    l0 += w[r]
                xi = X[r, f]
                xn = X[order[f, i + 1], f]
                if xn <= xi:
                    continue
                nl = i + 1 - start
                if nl < min_leaf or end - start - nl < min_leaf:
                    continue
                wl = l0 + l1
                r0 = tot0 - l0
                r1 = tot1 - l1
                wr = r0 + r1
                gl = 0.0
                if wl > 0:
                    gl = 1.0 - (l0 / wl) ** 2 - (l1 / wl) ** 2
                gr = 0.0
                if wr > 0:
                    gr = 1.0 - (r0 / wr) ** 2 - (r1 / wr) ** 2
                gain = parent - (wl / total) * gl - (wr / total) * gr
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    thr = 0.5 * (xi + xn)
                    if thr >= xn:
                        thr = xi
                    best_thr = thr
        if best_f < 0:
            continue
        if best_gain <= 1e-12 and not allow_zero_gain:
            continue

        nl = 0
        for i in range(start, end):
            r = order[best_f, i]
            gl_flag = X[r, best_f] <= best_thr
            goes_left[r] = gl_flag
            if gl_flag:
                nl += 1
        for f in range(d):
            a = 0
            b = nl
            for i in range(start, end):
                r = order[f, i]
                if goes_left[r]:
                    buf[a] = r
                    a += 1
                else:
                    buf[b] = r
                    b += 1
            for i in range(end - start):
                order[f, start + i] = buf[i]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        stack_start[sp] = start + nl
        stack_end[sp] = end
        stack_depth[sp] = depth + 1
        stack_node[sp] = rc
        sp += 1
        stack_start[sp] = start
        stack_end[sp] = start + nl
        stack_depth[sp] = depth + 1
        stack_node[sp] = lc
        sp += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True, nogil=True)
def _apply_trees(feature, threshold, left, right, value, roots, X, vote):
    """Mean over trees of leaf value (``vote=False``) or of leaf label (``vote=True``)."""
    n = X.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for t in range(roots.size):
        root = roots[t]
        for i in range(n):
            node = root
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            v = value[node]
            if vote:
                out[i] += 1.0 if v > 0.5 else 0.0
            else:
                out[i] += v
    return out / roots.size


TREE_KEYS = ("feature", "threshold", "left", "right", "value", "roots")


def build_tree(X, y, weights=None, max_depth=30, min_leaf=1, max_features=None, seed=0,
               allow_zero_gain=True) -> dict:
    """Grow one CART classification tree; returns its node arrays."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int8)
    w = np.ones(X.shape[0]) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    d = X.shape[1]
    mf = d if max_features is None else int(min(max(max_features, 1), d))
    arrays = _build_tree(X, y, w, int(max_depth), int(min_leaf), mf, int(seed) % (2**32),
                         bool(allow_zero_gain))
    out = dict(zip(TREE_KEYS[:-1], arrays))
    out["roots"] = np.zeros(1, dtype=np.int32)
    return out


def concat_trees(trees) -> dict:
    """Pack several trees into one node-array set with per-tree roots."""
    parts = {k: [] for k in TREE_KEYS[:-1]}
    roots = []
    offset = 0
    for t in trees:
        roots.append(offset)
        for k in ("feature", "threshold", "value"):
            parts[k].append(t[k])
        for k in ("left", "right"):
            child = t[k].astype(np.int32)
            parts[k].append(np.where(child >= 0, child + offset, -1).astype(np.int32))
        offset += t["feature"].size
    out = {k: np.concatenate(v) for k, v in parts.items()}
    out["roots"] = np.asarray(roots, dtype=np.int32)
    return out


def apply_trees(arrays: dict, X, vote=False) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    return _apply_trees(arrays["feature"], arrays["threshold"], arrays["left"], arrays["right"],
                        arrays["value"], arrays["roots"], X, bool(vote))


def weighted_resample(rows, weights, draw_count, seed) -> np.ndarray:
    """Draw ``draw_count`` rows i.i.d. with probability proportional to weight."""
    rows = np.asarray(rows)
    weights = np.asarray(weights, dtype=np.float64)
    if rows.shape[0] != weights.shape[0]:
        raise ValueError("rows and weights differ in length")
    if np.any(weights < 0) or not np.isfinite(weights).all():
        raise ValueError("weights must be finite and non-negative")
    total = weights.sum()
    if total <= 0:
        raise ValueError("all weights are zero")
    rng = np.random.default_rng(seed)
    # Inverse-CDF draw; avoids Generator.choice's strict sum-to-one check.
    cdf = np.cumsum(weights / total)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(int(draw_count)), side="right")
    return rows[np.minimum(idx, rows.shape[0] - 1)]


def undersample_majority(labels, weights, seed) -> np.ndarray:
    """All minority rows plus an equal number of weight-drawn majority rows."""
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels != 1)
    minority, majority = (pos, neg) if pos.size <= neg.size else (neg, pos)
    if minority.size == 0:
        return majority.copy()
    w = np.asarray(weights, dtype=np.float64)[majority]
    if w.sum() <= 0:
        w = np.ones(majority.size)
    drawn = weighted_resample(majority, w, minority.size, seed)
    return np.concatenate([minority, drawn])


class PresortedStumps:
    """Depth-1 learners over a fixed design matrix.

    Each column is sorted once; every boosting round then costs one
    cumulative-sum pass per column.
    """

    def __init__(self, X):
        self.X = np.asarray(X, dtype=np.float64)
        n, d = self.X.shape
        self.order = np.argsort(self.X, axis=0, kind="stable")
        self.sorted_x = np.take_along_axis(self.X, self.order, axis=0)
        self.boundaries = []
        self.thresholds = []
        for f in range(d):
            xs = self.sorted_x[:, f]
            b = np.flatnonzero(xs[1:] > xs[:-1])
            lo, hi = xs[b], xs[b + 1]
            thr = 0.5 * (lo + hi)
            self.boundaries.append(b)
            self.thresholds.append(np.where(thr >= hi, lo, thr))

    def gini_stump(self, y, w):
        """Best weighted-Gini stump: (feature, threshold, left_value, right_value).

        Leaf values are attack fractions; ``None`` when every column is constant
        or all weight sits on one class.
        """
        best = None
        best_gain = -np.inf
        yw1 = w * (y == 1)
        yw0 = w * (y != 1)
        tot1, tot0 = yw1.sum(), yw0.sum()
        total = tot0 + tot1
        if total <= 0:
            return None
        parent = 1.0 - (tot0 / total) ** 2 - (tot1 / total) ** 2
        for f in range(self.X.shape[1]):
            b = self.boundaries[f]
            if b.size == 0:
                continue
            o = self.order[:, f]
            c1 = np.cumsum(yw1[o])[b]
            c0 = np.cumsum(yw0[o])[b]
            wl = c0 + c1
            r0, r1 = tot0 - c0, tot1 - c1
            wr = r0 + r1
            with np.errstate(invalid="ignore", divide="ignore"):
                gl = np.where(wl > 0, 1.0 - (c0 / wl) ** 2 - (c1 / wl) ** 2, 0.0)
                gr = np.where(wr > 0, 1.0 - (r0 / wr) ** 2 - (r1 / wr) ** 2, 0.0)
            gains = parent - (wl / total) * gl - (wr / total) * gr
            i = int(np.argmax(gains))
            if gains[i] > best_gain:
                best_gain = gains[i]
                lv = c1[i] / wl[i] if wl[i] > 0 else 0.5
                rv = r1[i] / wr[i] if wr[i] > 0 else 0.5
                best = (f, float(self.thresholds[f][i]), float(lv), float(rv))
        return best

    def regression_stump(self, z, w):
        """Weighted least-squares stump: (feature, threshold, left_mean, right_mean)."""
        W = w.sum()
        S = (w * z).sum()
        best = None
        best_gain = -np.inf
        wz = w * z
        for f in range(self.X.shape[1]):
            b = self.boundaries[f]
            if b.size == 0:
                continue
            o = self.order[:, f]
            wl = np.cumsum(w[o])[b]
            sl = np.cumsum(wz[o])[b]
            wr, sr = W - wl, S - sl
            ok = (wl > 0) & (wr > 0)
            with np.errstate(invalid="ignore", divide="ignore"):
                gains = np.where(ok, sl * sl / wl + sr * sr / wr, -np.inf)
            i = int(np.argmax(gains))
            if gains[i] > best_gain:
                best_gain = gains[i]
                best = (f, float(self.thresholds[f][i]), float(sl[i] / wl[i]), float(sr[i] / wr[i]))
        if best is None:
            mean = S / W if W > 0 else 0.0
            return (0, np.inf, mean, mean)
        return best
