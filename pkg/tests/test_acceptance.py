"""Acceptance suite: one PASS / FAIL / BLOCKED line per criterion.

Criteria 4-8 and 10 need the real NSL-KDD files (KDDTrain+.txt,
KDDTest+.txt). Point NSLKDD_DIR (or NSLKDD_TRAIN and NSLKDD_TEST) at them,
or drop them in ./data. Without the files those criteria print BLOCKED and
skip. Tests marked "surrogate" exercise the same code path on synthetic
traffic and do not count towards the criterion.
"""

import json
import os
import time

import numpy as np
import pytest

from conftest import nslkdd_paths
from nidsbench.bench import canonical_json, load_config, run_benchmark
from nidsbench.bench.runner import load_splits
from nidsbench.cli import main
from nidsbench.dataset import apply_feature_policy, fit_standardizer
from nidsbench.metrics import ConfusionCounts, binary_metrics, roc_auc
from nidsbench.pca_select import sym_eigen, validate_selection
from nidsbench.synthetic import write_split

# Tolerances pinned from the acceptance criteria.
METRIC_TOL = 1e-12
NB_ACCURACY, NB_FAR, NB_PP_TOL = 49.12, 5.74, 0.05
AUC_TOL, AUC_SECONDS = 1e-9, 10.0
ORTHO_TOL, RESID_REL_TOL, TRACE_TOL = 1e-8, 1e-7, 1e-8
DT_TRAIN_MIN, DT_PATH_SECONDS = 99.0, 300.0
DT_TEST_MIN, NB_TEST_MAX = 78.0, 65.0
MCNEMAR_Z_MIN = 30.0
KNN_TRAIN_MAX, KNN_ELM_RATIO = 0.1, 5.0
SUBSAMPLE_SECONDS, FULL_SECONDS = 600.0, 2700.0

REAL = nslkdd_paths()


@pytest.fixture
def announce(capsys):
    def say(n, ok, detail):
        status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n[criterion {n}] {status}: {detail}")
    return say


def blocked(announce, n, what):
    if REAL is None:
        announce(n, "BLOCKED", f"{what} (dataset unavailable; set NSLKDD_DIR)")
        pytest.skip("NSL-KDD files not available")


def _real_config(**over):
    train, test = REAL
    return load_config(None, {"train_path": str(train), "test_path": str(test), **over})


@pytest.fixture(scope="module")
def real_core_report():
    """DT / NB / LDA / KNN / ELM on the default pipeline, timed."""
    t0 = time.perf_counter()
    cfg = _real_config(classifiers=["decision_tree", "naive_bayes", "lda", "knn", "elm"])
    report = run_benchmark(cfg)
    return report, time.perf_counter() - t0


def _row(report, kind):
    return next(r for r in report.classifiers if r["kind"] == kind)


# 1 -----------------------------------------------------------------------------

def _oracle(tp, tn, fp, fn):
    n = tp + tn + fp + fn
    return {
        "accuracy": (tp + tn) / n,
        "far": fp / (fp + tn) if fp + tn else 0.0,
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
        "f1": 2 * tp / (2 * tp + fp + fn) if tp else 0.0,
    }


def test_criterion_1_metric_oracle(announce):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        tp, tn, fp, fn = (int(v) for v in rng.integers(0, 5000, 4))
        if rng.random() < 0.1:  # exercise the empty-denominator branches
            tp = 0
        if tp + tn + fp + fn == 0:
            tn = 1
        got = binary_metrics(ConfusionCounts(tp, tn, fp, fn))
        want = _oracle(tp, tn, fp, fn)
        worst = max(worst, max(abs(got[k] - want[k]) for k in want))
    nb = binary_metrics(ConfusionCounts(tp=1920, tn=9154, fp=557, fn=10913))
    acc, far = 100 * nb["accuracy"], 100 * nb["far"]
    ok = worst <= METRIC_TOL and abs(acc - NB_ACCURACY) <= NB_PP_TOL and abs(far - NB_FAR) <= NB_PP_TOL
    announce(1, ok, f"max oracle gap {worst:.2e}; NB row accuracy {acc:.3f}% FAR {far:.3f}%")
    assert ok


# 2 -----------------------------------------------------------------------------

def _mann_whitney(scores, labels):
    pos, neg = scores[labels == 1], scores[labels == 0]
    gt = np.sum(pos[:, None] > neg[None, :])
    eq = np.sum(pos[:, None] == neg[None, :])
    return (gt + 0.5 * eq) / (pos.size * neg.size)


def test_criterion_2_auc_equivalence(announce):
    rng = np.random.default_rng(7)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(2, 501))
        labels = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(np.int8)
        labels[0], labels[1] = 0, 1
        scores = rng.random(n)
        ties = rng.random(n) < 0.3
        scores[ties] = np.round(scores[ties], 1)  # inject ties
        _, auc = roc_auc(scores, labels)
        worst = max(worst, abs(auc - _mann_whitney(scores, labels)))
    elapsed = time.perf_counter() - t0
    ok = worst <= AUC_TOL and elapsed < AUC_SECONDS
    announce(2, ok, f"max |AUC - Mann-Whitney| {worst:.2e} over 200 sets in {elapsed:.2f}s")
    assert ok


# 3 -----------------------------------------------------------------------------

def test_criterion_3_eigensolver(announce):
    rng = np.random.default_rng(3)
    worst = {"ortho": 0.0, "resid": 0.0, "trace": 0.0}
    ordered = True
    for _ in range(100):
        A = rng.normal(size=(20, 20))
        S = (A + A.T) / 2
        vals, V = sym_eigen(S)
        worst["ortho"] = max(worst["ortho"], np.abs(V.T @ V - np.eye(20)).max())
        norm_inf = np.abs(S).sum(axis=1).max()
        worst["resid"] = max(worst["resid"], np.abs(S @ V - V * vals).max() / norm_inf)
        worst["trace"] = max(worst["trace"], abs(vals.sum() - np.trace(S)))
        ordered &= bool(np.all(vals[:-1] >= vals[1:]))
    ok = (worst["ortho"] <= ORTHO_TOL and worst["resid"] <= RESID_REL_TOL
          and worst["trace"] <= TRACE_TOL and ordered)
    announce(3, ok, f"orthonormality {worst['ortho']:.1e}, residual/||S||inf {worst['resid']:.1e}, "
                    f"trace {worst['trace']:.1e}, descending {ordered}")
    assert ok


# 4 -----------------------------------------------------------------------------

def test_criterion_4_dt_training_accuracy(announce):
    blocked(announce, 4, "decision tree training accuracy on NSL-KDD")
    t0 = time.perf_counter()
    report = run_benchmark(_real_config(classifiers=["decision_tree"]))
    elapsed = time.perf_counter() - t0
    acc = 100 * _row(report, "decision_tree")["train"]["metrics"]["accuracy"]
    ok = acc >= DT_TRAIN_MIN and elapsed < DT_PATH_SECONDS and report.pipeline["pca_k"] == 9
    announce(4, ok, f"train accuracy {acc:.2f}% (pca_k {report.pipeline['pca_k']}), path {elapsed:.1f}s")
    assert ok


# 5 -----------------------------------------------------------------------------

def test_criterion_5_test_accuracy_ordering(announce, request):
    blocked(announce, 5, "test-side accuracy ordering on NSL-KDD")
    report, _ = request.getfixturevalue("real_core_report")
    acc = {k: 100 * _row(report, k)["test"]["metrics"]["accuracy"] for k in ("decision_tree", "naive_bayes", "lda")}
    ok = (acc["decision_tree"] >= DT_TEST_MIN and acc["naive_bayes"] <= NB_TEST_MAX
          and acc["decision_tree"] > acc["naive_bayes"] and acc["decision_tree"] > acc["lda"])
    announce(5, ok, "test accuracy " + ", ".join(f"{k} {v:.2f}%" for k, v in acc.items()))
    assert ok


# 6 -----------------------------------------------------------------------------

def test_criterion_6_mcnemar_dt_vs_nb(announce, request):
    blocked(announce, 6, "McNemar DT vs NB on NSL-KDD")
    report, _ = request.getfixturevalue("real_core_report")
    entry = next(e for e in report.mcnemar if {e["a"], e["b"]} == {"decision_tree", "naive_bayes"})
    ok = entry["z"] > MCNEMAR_Z_MIN and entry["better"] == "decision_tree" and entry["significant"]
    announce(6, ok, f"z {entry['z']:.1f}, better {entry['better']}")
    assert ok


# 7 -----------------------------------------------------------------------------

def _timing_shape(report):
    knn, elm = _row(report, "knn")["timing"], _row(report, "elm")["timing"]
    ratio = knn["test_seconds"] / max(elm["test_seconds"], 1e-3)
    return knn["train_seconds"] < KNN_TRAIN_MAX and ratio >= KNN_ELM_RATIO, knn, elm, ratio


def test_criterion_7_timing_shape(announce, request):
    blocked(announce, 7, "KNN vs ELM timing at full training size")
    report, _ = request.getfixturevalue("real_core_report")
    ok, knn, elm, ratio = _timing_shape(report)
    announce(7, ok, f"knn train {knn['train_seconds']:.3f}s; knn/elm test time ratio {ratio:.1f}x "
                    f"(n_train {report.pipeline['train_rows']})")
    assert ok


# 8 -----------------------------------------------------------------------------

def _grid_shape(train, m_range, k_range, seed):
    std = fit_standardizer(train)
    ds = apply_feature_policy(std.apply(train), "drop_content")
    g1 = validate_selection(ds, m_range, k_range, seed)
    g2 = validate_selection(ds, m_range, k_range, seed)
    cells = g1.cells()
    only_k_le_m = all(k <= m for m, k, _ in cells) and len(cells) == sum(
        1 for m in m_range for k in k_range if k <= m)
    best = g1.best()[2]
    m3 = max(a for m, _, a in cells if m == m_range[0])
    identical = g1.to_csv() == g2.to_csv() and canonical_json(g1.to_json()) == canonical_json(g2.to_json())
    return only_k_le_m and best > m3 and identical, best, m3, identical


def test_criterion_8_selection_grid(announce):
    blocked(announce, 8, "selection grid on NSL-KDD")
    cfg = _real_config()
    train, _ = load_splits(cfg)
    ok, best, m3, identical = _grid_shape(train, list(range(3, 30)), list(range(1, 11)), seed=0)
    announce(8, ok, f"best cell {best:.4f} vs best m=3 cell {m3:.4f}; byte-identical {identical}")
    assert ok


@pytest.mark.slow
def test_surrogate_8_selection_grid_synthetic(synthetic_splits):
    """Same grid machinery on synthetic traffic; not the criterion."""
    train, _ = synthetic_splits
    ok, *_ = _grid_shape(train, list(range(3, 12)), list(range(1, 6)), seed=0)
    assert ok


# 9 -----------------------------------------------------------------------------

def test_criterion_9_cli_determinism(announce, tmp_path):
    train, test = (REAL if REAL is not None else (tmp_path / "train.txt", tmp_path / "test.txt"))
    source = "NSL-KDD" if REAL is not None else "synthetic traffic files"
    if REAL is None:
        write_split(train, 6000, seed=5, split="train")
        write_split(test, 2000, seed=5, split="test")
    config = tmp_path / "config.json"
    body = {"train_path": str(train), "test_path": str(test), "seed": 17,
            "output": {"formats": ["json"], "save_predictions": False}}
    if REAL is not None:
        body["subsample"] = 0.1
    config.write_text(json.dumps(body))
    texts = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run", "--config", str(config), "--out", str(out)]) == 0
        data = json.loads((out / "report.json").read_text())
        data["config"]["output"]["directory"] = "<out>"
        texts.append(canonical_json(data, normalize=True))
    n_ok = sum(r["status"] == "ok" for r in json.loads(texts[0])["classifiers"])
    ok = texts[0] == texts[1] and n_ok == 12
    announce(9, ok, f"two CLI runs on {source}: normalized reports byte-identical {texts[0] == texts[1]}, "
                    f"{n_ok}/12 classifiers ok")
    assert ok


# 10 ----------------------------------------------------------------------------

def test_criterion_10_budget(announce):
    blocked(announce, 10, "desk-scale runtime budget")
    t0 = time.perf_counter()
    report = run_benchmark(_real_config(subsample=0.1, seed=0))
    sub = time.perf_counter() - t0
    ok = sub < SUBSAMPLE_SECONDS and all(r["status"] == "ok" for r in report.classifiers)
    detail = f"10% subsample, 12 classifiers: {sub:.0f}s"
    if os.environ.get("NIDSBENCH_FULL_BUDGET") == "1":
        t0 = time.perf_counter()
        run_benchmark(_real_config(seed=0, workers=min(4, os.cpu_count() or 1)))
        full = time.perf_counter() - t0
        ok = ok and full < FULL_SECONDS
        detail += f"; full size: {full:.0f}s"
    else:
        detail += "; full-size run not requested (set NIDSBENCH_FULL_BUDGET=1)"
    announce(10, ok, detail)
    assert ok
