from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig, TrainingError
from .scaler import FeatureScaler, apply_scaler, fit_scaler


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def class_weights(y: np.ndarray, mode: str | None) -> np.ndarray:
    """Per-sample weights; ``"balanced"`` gives each class equal total weight."""
    if mode is None:
        return np.ones(len(y))
    counts = np.bincount(y, minlength=2).astype(np.float64)
    per_class = np.where(counts > 0, len(y) / (2.0 * np.maximum(counts, 1)), 0.0)
    return per_class[y]


@dataclass(eq=False)
class LogisticModel:
    """P(theta=1 | x) = 1 / (1 + exp(-beta0 - beta1 . x))."""

    beta0: float
    beta1: np.ndarray
    threshold: float = 0.5
    scaler: FeatureScaler | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        x = apply_scaler(self.scaler, features)
        return sigmoid(self.beta0 + x @ self.beta1)


def neg_log_likelihood(beta0: float, beta1: np.ndarray, x: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    z = beta0 + x @ beta1
    # log(1 + e^z) - y z, evaluated stably
    per = np.logaddexp(0.0, z) - y * z
    return float(np.sum(w * per) / np.sum(w))


def train_logistic(train, cfg: TrainConfig) -> LogisticModel:
    """Full-batch gradient ascent on the (optionally weighted) Bernoulli log-likelihood."""
    x_raw, y = train.features, train.theta
    if len(y) == 0:
        raise TrainingError("empty training set")
    if len(np.unique(y)) < 2:
        warnings.warn("training set has a single class; logistic fit is degenerate", RuntimeWarning)
    scaler = fit_scaler(x_raw) if cfg.standardize else None
    x = apply_scaler(scaler, x_raw)
    w = class_weights(y, cfg.class_weight)
    wsum = w.sum()
    beta0, beta1 = 0.0, np.zeros(x.shape[1])
    lr = cfg.logistic_learning_rate
    history = [neg_log_likelihood(beta0, beta1, x, y, w)]
    for epoch in range(cfg.logistic_epochs):
        resid = w * (y - sigmoid(beta0 + x @ beta1)) / wsum
        beta0 += lr * resid.sum()
        beta1 = beta1 + lr * (x.T @ resid)
        loss = neg_log_likelihood(beta0, beta1, x, y, w)
        if not np.isfinite(loss):
            raise TrainingError(f"logistic loss became {loss} at epoch {epoch}; lower logistic_learning_rate (now {lr})")
        history.append(loss)
    return LogisticModel(float(beta0), beta1, cfg.baseline_threshold, scaler, history)
