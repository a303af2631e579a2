"""Experiment configuration: JSON file + command-line overrides, strictly validated."""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..classifiers import DEFAULT_HYPERPARAMETERS, KINDS
from ..dataset import BASIC6_IDS, CONTENT_IDS, FEATURE_IDS
from ..pca_select import WEIGHTINGS

log = logging.getLogger(__name__)

FORMATS = ("json", "csv", "md")
POLICIES = ("all", "drop_content", "basic6")


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending key path."""


DEFAULTS: dict[str, Any] = {
    "train_path": None,
    "test_path": None,
    "encoding": "ordinal",
    "feature_policy": "drop_content",
    "selection": {
        "enabled": True,
        "top_m": 9,
        "weighting": "eigenvalue_weighted",
        "top_components": 10,
    },
    "pca_k": 10,
    "classifiers": list(KINDS),
    "hyperparameters": {},
    "seed": 0,
    "subsample": None,
    "evaluate_train": True,
    "workers": 1,
    "output": {"directory": "results", "formats": list(FORMATS), "save_predictions": True},
}


@dataclass
class ExperimentConfig:
    train_path: str
    test_path: str
    encoding: str = "ordinal"
    feature_policy: Any = "drop_content"
    selection: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["selection"]))
    pca_k: int | None = 10
    classifiers: list = field(default_factory=lambda: list(KINDS))
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0
    subsample: float | None = None
    evaluate_train: bool = True
    workers: int = 1
    output: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["output"]))
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "train_path": self.train_path,
            "test_path": self.test_path,
            "encoding": self.encoding,
            "feature_policy": self.feature_policy,
            "selection": dict(self.selection),
            "pca_k": self.pca_k,
            "classifiers": list(self.classifiers),
            "hyperparameters": copy.deepcopy(self.hyperparameters),
            "seed": self.seed,
            "subsample": self.subsample,
            "evaluate_train": self.evaluate_train,
            "workers": self.workers,
            "output": copy.deepcopy(self.output),
        }


def policy_dimension(policy) -> int:
    if policy == "all":
        return len(FEATURE_IDS)
    if policy == "drop_content":
        return len(FEATURE_IDS) - len(CONTENT_IDS)
    if policy == "basic6":
        return len(BASIC6_IDS)
    return len(policy)


def _check_keys(data: dict, allowed: dict, prefix: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{prefix}{key}'")


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    _check_keys(override, base, prefix)
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(base.get(key), dict) and key not in ("hyperparameters",):
            if not isinstance(value, dict):
                raise ConfigError(f"'{prefix}{key}' must be an object")
            out[key] = _merge(base[key], value, f"{prefix}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def load_config(path=None, overrides: dict | None = None, check_paths: bool = True) -> ExperimentConfig:
    """Read a JSON config (optional), apply ``overrides``, fill defaults, validate.

    ``overrides`` uses the same nested layout as the file and wins over it.
    """
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        _require(isinstance(data, dict), "config root must be an object")
    merged = _merge(DEFAULTS, data)
    if overrides:
        merged = _merge(merged, overrides)

    for key in ("train_path", "test_path"):
        _require(merged[key] is not None, f"'{key}' is required")
        if check_paths:
            _require(Path(merged[key]).exists(), f"'{key}': file not found: {merged[key]}")
    _require(merged["encoding"] in ("ordinal", "onehot"), "'encoding' must be ordinal or onehot")

    policy = merged["feature_policy"]
    if isinstance(policy, list):
        bad = [p for p in policy if p not in FEATURE_IDS]
        _require(not bad, f"'feature_policy': unknown feature ids {bad}")
        _require(len(policy) > 0, "'feature_policy': explicit list is empty")
    else:
        _require(policy in POLICIES, f"'feature_policy' must be one of {POLICIES} or a list of ids")
    dim = policy_dimension(policy)

    sel = merged["selection"]
    _require(isinstance(sel["enabled"], bool), "'selection.enabled' must be a boolean")
    _require(isinstance(sel["top_m"], int) and sel["top_m"] >= 1, "'selection.top_m' must be a positive integer")
    _require(sel["weighting"] in WEIGHTINGS, f"'selection.weighting' must be one of {WEIGHTINGS}")
    _require(isinstance(sel["top_components"], int) and sel["top_components"] >= 1,
             "'selection.top_components' must be a positive integer")
    if sel["enabled"]:
        _require(sel["top_m"] <= dim, f"'selection.top_m' = {sel['top_m']} exceeds the {dim} features left by the policy")
    available = sel["top_m"] if sel["enabled"] else dim

    warnings = []
    k = merged["pca_k"]
    if k is not None:
        _require(isinstance(k, int) and k >= 1, "'pca_k' must be a positive integer or null")
        if k > available:
            msg = f"pca_k={k} exceeds the {available} available features; clamped to {available}"
            log.warning(msg)
            warnings.append(msg)
            k = available

    classifiers = merged["classifiers"]
    _require(isinstance(classifiers, list) and classifiers, "'classifiers' must be a non-empty list")
    bad = [c for c in classifiers if c not in KINDS]
    _require(not bad, f"'classifiers': unknown kinds {bad}")
    _require(len(set(classifiers)) == len(classifiers), "'classifiers' contains duplicates")
    for kind, hp in merged["hyperparameters"].items():
        _require(kind in KINDS, f"unknown config key 'hyperparameters.{kind}'")
        _require(isinstance(hp, dict), f"'hyperparameters.{kind}' must be an object")
        for key in hp:
            _require(key in DEFAULT_HYPERPARAMETERS[kind], f"unknown config key 'hyperparameters.{kind}.{key}'")

    _require(isinstance(merged["seed"], int), "'seed' must be an integer")
    sub = merged["subsample"]
    _require(sub is None or (isinstance(sub, (int, float)) and 0 < sub <= 1), "'subsample' must be in (0, 1] or null")
    _require(isinstance(merged["workers"], int) and merged["workers"] >= 1, "'workers' must be >= 1")
    fmts = merged["output"]["formats"]
    _require(isinstance(fmts, list) and all(f in FORMATS for f in fmts), f"'output.formats' must be a subset of {FORMATS}")

    return ExperimentConfig(
        train_path=str(merged["train_path"]),
        test_path=str(merged["test_path"]),
        encoding=merged["encoding"],
        feature_policy=policy,
        selection=sel,
        pca_k=k,
        classifiers=list(classifiers),
        hyperparameters=merged["hyperparameters"],
        seed=merged["seed"],
        subsample=None if sub is None or sub == 1 else float(sub),
        evaluate_train=bool(merged["evaluate_train"]),
        workers=merged["workers"],
        output=merged["output"],
        warnings=warnings,
    )
