from .base import (
    DEFAULT_HYPERPARAMETERS,
    DISPLAY_NAMES,
    KINDS,
    MARGIN_KINDS,
    ClassifierError,
    ClassifierSpec,
    SpecError,
    TrainedModel,
    fit_model,
    predict_labels,
    predict_scores,
    threshold_for,
)
from . import ensemble, linear, neighbors, neural  # noqa: F401  (registers the kinds)
from .persist import load_model, save_model
from .tree import best_split, gini_impurity, undersample_majority, weighted_resample

__all__ = [
    "DEFAULT_HYPERPARAMETERS", "DISPLAY_NAMES", "KINDS", "MARGIN_KINDS",
    "ClassifierError", "ClassifierSpec", "SpecError", "TrainedModel",
    "fit_model", "predict_labels", "predict_scores", "threshold_for",
    "load_model", "save_model",
    "best_split", "gini_impurity", "undersample_majority", "weighted_resample",
]
