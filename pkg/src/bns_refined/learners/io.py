"""Self-describing JSON documents for trained models."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forest import DecisionTree, ForestModel
from .logistic import LogisticModel
from .nets import DenseNet, LstmNet
from .scaler import FeatureScaler

FORMAT_VERSION = 1


def _arrays(d: dict) -> dict:
    return {k: np.asarray(v).tolist() for k, v in d.items()}


def model_to_dict(model) -> dict:
    scaler = getattr(model, "scaler", None)
    doc = {"format_version": FORMAT_VERSION, "threshold": model.threshold,
           "scaler": scaler.to_dict() if scaler is not None else None}
    if isinstance(model, LogisticModel):
        doc.update(architecture="logistic", beta0=model.beta0, beta1=model.beta1.tolist())
    elif isinstance(model, ForestModel):
        doc.update(
            architecture="random-forest",
            max_depth=model.max_depth,
            features_per_split=model.features_per_split,
            trees=[{"feature": t.feature.tolist(), "threshold": t.threshold.tolist(), "left": t.left.tolist(),
                    "right": t.right.tolist(), "counts": t.counts.tolist()} for t in model.trees],
        )
    elif isinstance(model, DenseNet):
        doc.update(architecture="dense", layers=["tanh", "relu", "softmax"], weights=_arrays(model.params))
    elif isinstance(model, LstmNet):
        doc.update(
            architecture="lstm-bn" if model.use_batchnorm else "lstm",
            layers=["lstm"] + (["batchnorm"] if model.use_batchnorm else []) + ["tanh", "relu", "softmax"],
            bn_epsilon=model.bn_epsilon,
            running_mean=None if model.running_mean is None else model.running_mean.tolist(),
            running_var=None if model.running_var is None else model.running_var.tolist(),
            weights=_arrays(model.params),
        )
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    arch = doc["architecture"]
    scaler = FeatureScaler.from_dict(doc["scaler"]) if doc.get("scaler") else None
    thr = doc["threshold"]
    if arch == "logistic":
        return LogisticModel(doc["beta0"], np.array(doc["beta1"], dtype=np.float64), thr, scaler)
    if arch == "random-forest":
        trees = [DecisionTree(np.array(t["feature"], dtype=np.int64), np.array(t["threshold"], dtype=np.float64),
                              np.array(t["left"], dtype=np.int64), np.array(t["right"], dtype=np.int64),
                              np.array(t["counts"], dtype=np.int64).reshape(-1, 2)) for t in doc["trees"]]
        return ForestModel(trees, doc["max_depth"], doc["features_per_split"], thr)
    weights = {k: np.array(v, dtype=np.float64) for k, v in doc["weights"].items()}
    if arch == "dense":
        return DenseNet(weights, thr, scaler)
    if arch in ("lstm", "lstm-bn"):
        rm, rv = doc.get("running_mean"), doc.get("running_var")
        return LstmNet(weights, arch == "lstm-bn", doc["bn_epsilon"],
                       None if rm is None else np.array(rm), None if rv is None else np.array(rv), thr, scaler)
    raise ValueError(f"unknown architecture {arch!r}")


def save_model(model, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), indent=1) + "\n")
    return path


def load_model(path: str | Path):
    return model_from_dict(json.loads(Path(path).read_text()))
