"""Model container.

A saved model is an ``.npz`` archive: every fitted parameter array under its
own name, plus ``__meta__`` holding JSON text::

    {"format": "nidsbench-model", "version": 1, "kind": ..., "input_dimension": d,
     "spec": {"kind", "hyperparameters", "seed"}, "train_seconds": ...}

Arrays are stored verbatim, so predictions survive a round trip bit for bit.
"""

from __future__ import annotations

import json
from types import MappingProxyType

import numpy as np

from .base import ClassifierSpec, TrainedModel

MODEL_FORMAT = "nidsbench-model"
MODEL_VERSION = 1


def save_model(model: TrainedModel, path) -> None:
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "input_dimension": model.input_dimension,
        "spec": model.spec.to_json(),
        "train_seconds": model.train_seconds,
    }
    arrays = {k: np.asarray(v) for k, v in model.params.items()}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)


def load_model(path) -> TrainedModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a {MODEL_FORMAT} container")
        if meta.get("version") != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {meta.get('version')}")
        params = {k: data[k] for k in data.files if k != "__meta__"}
    for v in params.values():
        v.setflags(write=False)
    spec = ClassifierSpec(**meta["spec"])
    return TrainedModel(meta["kind"], MappingProxyType(params), int(meta["input_dimension"]), spec,
                        float(meta["train_seconds"]))
