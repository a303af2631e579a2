"""End-to-end experiment: ingest, scale, select, project, fit, evaluate."""

from __future__ import annotations

import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

from .. import __version__
from ..classifiers import DISPLAY_NAMES, KINDS, ClassifierSpec, fit_model
from ..dataset import (
    CATEGORY_NAMES,
    EncodedDataset,
    apply_feature_policy,
    build_vocabularies,
    encode,
    fit_standardizer,
    load_dataset,
    parse_nslkdd,
    stratified_indices,
)
from ..metrics import TimingRecord, binary_metrics, confusion_counts, mcnemar, roc_auc
from ..pca_select import fit_pca, rank_features, transform
from .config import ExperimentConfig

log = logging.getLogger(__name__)


def derive_seed(seed: int, kind: str) -> int:
    """Per-classifier seed from (global seed, kind index); independent of scheduling."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, KINDS.index(kind)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def environment_descriptor() -> dict:
    try:
        mem = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES") / 2**30
    except (ValueError, OSError, AttributeError):
        mem = None
    return {
        "machine": platform.machine(),
        "processor": platform.processor() or platform.machine(),
        "cpu_count": os.cpu_count(),
        "memory_gib": None if mem is None else round(mem, 1),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "system": platform.system(),
    }


def load_splits(config: ExperimentConfig) -> tuple[EncodedDataset, EncodedDataset]:
    """Read train/test as NSL-KDD text or as ingested ``.npz`` containers."""
    train_path, test_path = Path(config.train_path), Path(config.test_path)
    if train_path.suffix == ".npz":
        return load_dataset(train_path), load_dataset(test_path)
    train_records = parse_nslkdd(train_path)
    vocab = build_vocabularies(train_records)
    train = encode(train_records, vocab, "train", config.encoding)
    test = encode(parse_nslkdd(test_path), vocab, "test", config.encoding)
    return train, test


@dataclass
class PreparedData:
    """Train/test matrices after scaling, policy, selection and projection.

    Every fitted transform is estimated on the training split alone.
    """

    train_X: np.ndarray
    test_X: np.ndarray
    train: EncodedDataset
    test: EncodedDataset
    policy_columns: list
    selected_features: list
    ranking: list
    pca_k: int | None
    explained_variance: list
    state: dict = field(default_factory=dict)


def prepare(config: ExperimentConfig, train: EncodedDataset, test: EncodedDataset) -> PreparedData:
    if config.subsample:
        rows, _ = stratified_indices(train.labels, config.subsample, config.seed)
        train = train.subset(rows)
        rows, _ = stratified_indices(test.labels, config.subsample, config.seed + 1)
        test = test.subset(rows)
    std = fit_standardizer(train)
    train_s = apply_feature_policy(std.apply(train), config.feature_policy)
    test_s = apply_feature_policy(std.apply(test), config.feature_policy)
    policy_columns = list(train_s.column_ids)

    sel = config.selection
    ranking = []
    if sel["enabled"]:
        full_model = fit_pca(train_s.matrix, train_s.column_ids)
        rk = rank_features(full_model, sel["weighting"], sel["top_components"])
        ranking = [[fid, score] for fid, score in rk.entries]
        chosen = rk.top(sel["top_m"])
        train_s = apply_feature_policy(train_s, chosen)
        test_s = apply_feature_policy(test_s, chosen)
    selected = list(train_s.column_ids)

    explained = []
    state = {"standardizer_mean": std.mean, "standardizer_scale": std.scale}
    if config.pca_k is not None:
        k = min(config.pca_k, train_s.n_features)
        pca = fit_pca(train_s.matrix, train_s.column_ids)
        train_X = transform(pca, train_s.matrix, k, train_s.column_ids)
        test_X = transform(pca, test_s.matrix, k, test_s.column_ids)
        explained = pca.explained_ratio()[:k].tolist()
        state.update(pca_mean=pca.mean, pca_vectors=pca.eigenvectors[:, :k])
    else:
        k = None
        train_X, test_X = train_s.matrix, test_s.matrix
    return PreparedData(train_X, test_X, train_s, test_s, policy_columns, selected, ranking, k,
                        explained, state)


def _evaluate(labels, categories, pred, scores):
    counts = confusion_counts(labels, pred)
    out = {"counts": counts.to_json(), "metrics": binary_metrics(counts)}
    try:
        curve, auc = roc_auc(scores, labels)
    except ValueError:
        curve, auc = None, None
    out["auc"] = auc
    per_cat = {}
    for code, name in enumerate(CATEGORY_NAMES):
        mask = categories == code
        if mask.any():
            per_cat[name] = float(np.mean(pred[mask] == 1))
    out["attack_rate_by_category"] = per_cat
    return out, curve


def _run_one(kind: str, config: ExperimentConfig, data: PreparedData) -> dict:
    seed = derive_seed(config.seed, kind)
    row = {"kind": kind, "name": DISPLAY_NAMES[kind], "seed": seed}
    try:
        spec = ClassifierSpec(kind, config.hyperparameters.get(kind, {}), seed)
        model = fit_model(spec, data.train_X, data.train.labels)
        t0 = time.perf_counter()
        test_pred = model.predict_labels(data.test_X)
        test_seconds = time.perf_counter() - t0
        test_scores = model.predict_scores(data.test_X)
        test_eval, test_curve = _evaluate(data.test.labels, data.test.categories, test_pred, test_scores)
        row.update(status="ok", error=None, test=test_eval,
                   timing=TimingRecord(model.train_seconds, test_seconds).to_json())
        row["_test_correct"] = test_pred == data.test.labels
        row["_test_curve"] = test_curve
        row["_test_scores"] = test_scores
        row["_test_pred"] = test_pred
        if config.evaluate_train:
            train_scores = model.predict_scores(data.train_X)
            train_pred = model.predict_labels(data.train_X)
            train_eval, train_curve = _evaluate(data.train.labels, data.train.categories, train_pred, train_scores)
            row["train"] = train_eval
            row["_train_curve"] = train_curve
    except Exception as exc:  # failure isolation: one broken classifier never sinks the run
        log.exception("classifier %s failed", kind)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


@dataclass
class BenchReport:
    config: dict
    environment: dict
    pipeline: dict
    classifiers: list
    mcnemar: list
    artifact_version: str = __version__
    # ROC curves, scores and predictions; kept out of the canonical JSON body.
    series: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "artifact": {"name": "nidsbench", "version": self.artifact_version},
            "config": self.config,
            "environment": self.environment,
            "pipeline": self.pipeline,
            "classifiers": self.classifiers,
            "mcnemar": self.mcnemar,
        }


def mcnemar_matrix(names: list, correct: dict) -> list:
    """McNemar entries for every unordered pair, in classifier-list order."""
    entries = []
    for a, b in combinations(names, 2):
        res = mcnemar(correct[a], correct[b])
        better = a if res.direction == "a" else b if res.direction == "b" else None
        entries.append({"a": a, "b": b, "n12": res.n12, "n21": res.n21, "z": res.z,
                        "significant": res.significant, "better": better})
    return entries


def run_benchmark(config: ExperimentConfig, splits=None) -> BenchReport:
    """Fit and evaluate every configured classifier; one report row each."""
    train, test = splits if splits is not None else load_splits(config)
    data = prepare(config, train, test)
    kinds = list(config.classifiers)
    if config.workers > 1 and len(kinds) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda k: _run_one(k, config, data), kinds))
    else:
        rows = [_run_one(k, config, data) for k in kinds]

    series = {"test_labels": data.test.labels}
    correct = {}
    public_rows = []
    for row in rows:
        extras = {k: row.pop(k) for k in list(row) if k.startswith("_")}
        if row["status"] == "ok":
            correct[row["kind"]] = extras["_test_correct"]
            curve = extras.get("_test_curve")
            row["test"]["roc"] = None if curve is None else {
                "fpr": curve.fpr.tolist(), "tpr": curve.tpr.tolist()}
            series[row["kind"]] = extras
        public_rows.append(row)
    ok_names = [r["kind"] for r in public_rows if r["status"] == "ok"]

    pipeline = {
        "train_rows": data.train.n_rows,
        "test_rows": data.test.n_rows,
        "policy_columns": data.policy_columns,
        "selected_features": data.selected_features,
        "ranking": data.ranking,
        "pca_k": data.pca_k,
        "explained_variance": data.explained_variance,
        "warnings": list(config.warnings),
    }
    return BenchReport(
        config=config.to_json(),
        environment=environment_descriptor(),
        pipeline=pipeline,
        classifiers=public_rows,
        mcnemar=mcnemar_matrix(ok_names, correct),
        series=series,
    )
