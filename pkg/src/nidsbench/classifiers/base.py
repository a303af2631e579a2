"""Uniform fit / score / predict contract over the twelve classifier kinds."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping

import numpy as np

KINDS = (
    "naive_bayes", "lda", "linear_svm", "mlp", "elm", "knn",
    "decision_tree", "random_forest", "adaboost", "rusboost", "logitboost", "bagging_trees",
)

DISPLAY_NAMES = {
    "naive_bayes": "Naive Bayes",
    "lda": "LDA",
    "linear_svm": "Linear SVM",
    "mlp": "NN",
    "elm": "ELM",
    "knn": "KNN",
    "decision_tree": "Decision Tree",
    "random_forest": "RandomForest",
    "adaboost": "AdaBoost",
    "rusboost": "RUSBoost",
    "logitboost": "LogitBoost",
    "bagging_trees": "BaggingTrees",
}

DEFAULT_HYPERPARAMETERS: Mapping[str, Mapping[str, Any]] = MappingProxyType({
    "naive_bayes": {"var_smoothing": 1e-9},
    "lda": {"shrinkage": 1e-4},
    "linear_svm": {"lam": 1e-4, "epochs": 20},
    "mlp": {"hidden": 30, "batch_size": 128, "learning_rate": 0.01, "epochs": 30},
    "elm": {"hidden": 100, "ridge": 1e-6},
    "knn": {"k": 5, "chunk_rows": 128},
    "decision_tree": {"max_depth": 30, "min_leaf": 1},
    "random_forest": {"n_trees": 100, "max_depth": 30, "min_leaf": 1},
    "bagging_trees": {"n_trees": 100, "max_depth": 30, "min_leaf": 1},
    "adaboost": {"rounds": 100},
    "rusboost": {"rounds": 100},
    "logitboost": {"rounds": 100, "z_max": 4.0, "weight_floor": 1e-10},
})

# Score > threshold  <=>  predicted attack.
MARGIN_KINDS = frozenset({"linear_svm", "elm", "adaboost", "rusboost"})


def threshold_for(kind: str) -> float:
    return 0.0 if kind in MARGIN_KINDS else 0.5


class ClassifierError(RuntimeError):
    """Training or prediction failed for one classifier."""


class SpecError(ValueError):
    """Invalid classifier specification."""


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown classifier kind {self.kind!r}")
        unknown = sorted(set(self.hyperparameters) - set(DEFAULT_HYPERPARAMETERS[self.kind]))
        if unknown:
            raise SpecError(f"{self.kind}: unknown hyperparameter(s) {', '.join(unknown)}")
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))

    def resolved(self) -> dict:
        hp = dict(DEFAULT_HYPERPARAMETERS[self.kind])
        hp.update(self.hyperparameters)
        return hp

    def to_json(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters), "seed": int(self.seed)}


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    params: Mapping[str, np.ndarray]
    input_dimension: int
    spec: ClassifierSpec
    train_seconds: float = 0.0

    @property
    def degenerate(self) -> bool:
        return "constant" in self.params

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dimension:
            raise ClassifierError(
                f"{self.kind}: expected {self.input_dimension} input columns, got "
                f"{X.shape[1] if X.ndim == 2 else X.shape}"
            )
        return X

    def predict_scores(self, X) -> np.ndarray:
        X = self._check(X)
        if self.degenerate:
            return np.full(X.shape[0], float(self.params["constant"][0]))
        return _REGISTRY[self.kind][1](self.params, X, self.spec.resolved())

    def predict_labels(self, X) -> np.ndarray:
        return (self.predict_scores(X) > threshold_for(self.kind)).astype(np.int8)


_REGISTRY: dict[str, tuple[Callable, Callable]] = {}


def register(kind: str):
    """Attach ``fit(X, y, hp, seed) -> params`` and ``score(params, X, hp)``."""
    def deco(pair):
        _REGISTRY[kind] = pair
        return pair
    return deco


def _as_arrays(data, y=None):
    if y is None:
        return np.asarray(data.matrix, dtype=np.float64), np.asarray(data.labels, dtype=np.int8)
    return np.asarray(data, dtype=np.float64), np.asarray(y, dtype=np.int8)


def fit_model(spec: ClassifierSpec, train, labels=None) -> TrainedModel:
    """Fit ``spec`` on an ``EncodedDataset`` (or on ``X, labels`` arrays)."""
    X, y = _as_arrays(train, labels)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ClassifierError(f"{spec.kind}: empty training set")
    if not np.isfinite(X).all():
        raise ClassifierError(f"{spec.kind}: training matrix contains NaN or infinity")
    if y.shape != (X.shape[0],) or not np.isin(y, (0, 1)).all():
        raise ClassifierError(f"{spec.kind}: labels must be a 0/1 vector matching the rows")
    t0 = time.perf_counter()
    classes = np.unique(y)
    if classes.size == 1:
        attack = classes[0] == 1
        low = -1.0 if spec.kind in MARGIN_KINDS else 0.0
        params = {"constant": np.array([1.0 if attack else low])}
    else:
        fit, _ = _REGISTRY[spec.kind]
        params = fit(X, y, spec.resolved(), int(spec.seed))
    elapsed = time.perf_counter() - t0
    params = {k: np.asarray(v) for k, v in params.items()}
    for v in params.values():
        v.setflags(write=False)
    return TrainedModel(spec.kind, MappingProxyType(params), X.shape[1], spec, elapsed)


def predict_scores(model: TrainedModel, X) -> np.ndarray:
    return model.predict_scores(X)


def predict_labels(model: TrainedModel, X) -> np.ndarray:
    return model.predict_labels(X)
