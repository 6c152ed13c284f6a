"""The five theta classifiers and their shared prediction contract."""

from __future__ import annotations

import numpy as np

from .config import TrainConfig, TrainingError
from .forest import DecisionTree, ForestModel, train_forest
from .io import load_model, model_from_dict, model_to_dict, save_model
from .logistic import LogisticModel, sigmoid, train_logistic
from .nets import DenseNet, LstmNet, train_dense, train_lstm
from .scaler import FeatureScaler, apply_scaler, fit_scaler

MODEL_NAMES = ("lr", "rf", "nn", "lstm", "lstm-bn")
DISPLAY_NAMES = {"lr": "LR", "rf": "RF", "nn": "NN (A)", "lstm": "LSTM (B)", "lstm-bn": "BN (C)"}


def train_model(name: str, train, cfg: TrainConfig):
    if name == "lr":
        return train_logistic(train, cfg)
    if name == "rf":
        return train_forest(train, cfg)
    if name == "nn":
        return train_dense(train, cfg)
    if name == "lstm":
        return train_lstm(train, cfg, use_batchnorm=False)
    if name == "lstm-bn":
        return train_lstm(train, cfg, use_batchnorm=True)
    raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def predict_theta(model, rows, threshold: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Class-1 probabilities and labels ``prob > threshold`` for raw feature rows.

    ``rows`` is an (n, 7) array of closes or anything with a ``features``
    attribute; the model applies its own scaler.
    """
    x = np.asarray(getattr(rows, "features", rows), dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1)
    if x.shape[1] != 7:
        raise ValueError(f"expected 7 features per row, got {x.shape[1]}")
    prob = np.asarray(model.predict_proba(x), dtype=np.float64)
    thr = model.threshold if threshold is None else threshold
    return prob, (prob > thr).astype(np.int64)


__all__ = [
    "MODEL_NAMES", "DISPLAY_NAMES", "TrainConfig", "TrainingError", "FeatureScaler", "fit_scaler",
    "apply_scaler", "LogisticModel", "ForestModel", "DecisionTree", "DenseNet", "LstmNet", "sigmoid",
    "train_logistic", "train_forest", "train_dense", "train_lstm", "train_model", "predict_theta",
    "save_model", "load_model", "model_to_dict", "model_from_dict",
]
