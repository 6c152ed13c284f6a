"""Dense (tanh, ReLU, softmax) network and an LSTM feeding the same head.

Parameters live in plain dicts of float64 arrays; forward passes return a
cache consumed by the matching backward pass.  Everything is written out by
hand so the gradients can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import rng as rngmod
from .config import TrainConfig, TrainingError
from .logistic import class_weights, sigmoid
from .scaler import FeatureScaler, apply_scaler, fit_scaler

HEAD_KEYS = ("W1", "b1", "W2", "b2", "W3", "b3")
LSTM_KEYS = ("Wx", "Wh", "b")
BN_KEYS = ("gamma", "beta")
_INIT_SUB = 0
_SHUFFLE_SUB = 1
_UNIT = {"nn": 101, "lstm": 102, "lstm-bn": 103}


# ---------------------------------------------------------------- primitives

def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, y: np.ndarray, w: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Weighted mean softmax cross-entropy and its gradient w.r.t. the logits."""
    n = len(y)
    w = np.ones(n) if w is None else w
    wsum = w.sum()
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = -float(np.sum(w * logp[np.arange(n), y]) / wsum)
    d = np.exp(logp)
    d[np.arange(n), y] -= 1.0
    return loss, d * (w / wsum)[:, None]


def glorot(gen: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-limit, limit, size=(fan_in, fan_out))


def flatten(params: dict[str, np.ndarray], keys) -> np.ndarray:
    return np.concatenate([params[k].ravel() for k in keys])


def unflatten(vec: np.ndarray, like: dict[str, np.ndarray], keys) -> dict[str, np.ndarray]:
    out, pos = dict(like), 0
    for k in keys:
        size = like[k].size
        out[k] = vec[pos:pos + size].reshape(like[k].shape)
        pos += size
    return out


# ---------------------------------------------------------------- dense head

def init_head(gen: np.random.Generator, n_in: int, h1: int, h2: int) -> dict[str, np.ndarray]:
    return {
        "W1": glorot(gen, n_in, h1), "b1": np.zeros(h1),
        "W2": glorot(gen, h1, h2), "b2": np.zeros(h2),
        "W3": glorot(gen, h2, 2), "b3": np.zeros(2),
    }


def head_forward(p: dict, x: np.ndarray):
    a1 = np.tanh(x @ p["W1"] + p["b1"])
    z2 = a1 @ p["W2"] + p["b2"]
    a2 = np.maximum(z2, 0.0)
    logits = a2 @ p["W3"] + p["b3"]
    return logits, (x, a1, z2, a2)


def head_backward(p: dict, cache, dlogits: np.ndarray):
    x, a1, z2, a2 = cache
    g = {"W3": a2.T @ dlogits, "b3": dlogits.sum(axis=0)}
    dz2 = (dlogits @ p["W3"].T) * (z2 > 0)
    g["W2"], g["b2"] = a1.T @ dz2, dz2.sum(axis=0)
    dz1 = (dz2 @ p["W2"].T) * (1.0 - a1 * a1)
    g["W1"], g["b1"] = x.T @ dz1, dz1.sum(axis=0)
    return g, dz1 @ p["W1"].T


def dense_loss_and_grad(p: dict, x: np.ndarray, y: np.ndarray, w: np.ndarray | None = None):
    logits, cache = head_forward(p, x)
    loss, dlogits = cross_entropy(logits, y, w)
    grads, _ = head_backward(p, cache, dlogits)
    return loss, grads


# ---------------------------------------------------------------- batch norm

def batchnorm_forward(h: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float):
    """Training-mode batch normalisation over axis 0 (biased batch variance)."""
    if len(h) < 2:
        raise TrainingError("batch normalisation in training mode needs batches of at least 2 rows")
    mu = h.mean(axis=0)
    var = h.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (h - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std, mu, var)


def batchnorm_backward(dout: np.ndarray, gamma: np.ndarray, cache):
    xhat, inv_std, _, _ = cache
    n = len(dout)
    dxhat = dout * gamma
    dh = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0))
    return dh, {"gamma": np.sum(dout * xhat, axis=0), "beta": dout.sum(axis=0)}


# ---------------------------------------------------------------- LSTM

def init_lstm(gen: np.random.Generator, hidden: int, h1: int, h2: int, use_batchnorm: bool) -> dict:
    p = {
        "Wx": glorot(gen, 1, 4 * hidden),
        "Wh": glorot(gen, hidden, 4 * hidden),
        "b": np.zeros(4 * hidden),
    }
    p["b"][hidden:2 * hidden] = 1.0  # forget-gate bias
    if use_batchnorm:
        p["gamma"], p["beta"] = np.ones(hidden), np.zeros(hidden)
    p.update(init_head(gen, hidden, h1, h2))
    return p


def lstm_keys(use_batchnorm: bool) -> tuple[str, ...]:
    return LSTM_KEYS + (BN_KEYS if use_batchnorm else ()) + HEAD_KEYS


def lstm_sequence(p: dict, seq: np.ndarray):
    """Run the LSTM over ``seq`` of shape (batch, steps); returns final h and the step caches."""
    n, steps = seq.shape
    hidden = p["Wh"].shape[0]
    h = np.zeros((n, hidden))
    c = np.zeros((n, hidden))
    caches = []
    for t in range(steps):
        xt = seq[:, t:t + 1]
        z = xt @ p["Wx"] + h @ p["Wh"] + p["b"]
        i = sigmoid(z[:, :hidden])
        f = sigmoid(z[:, hidden:2 * hidden])
        o = sigmoid(z[:, 2 * hidden:3 * hidden])
        g = np.tanh(z[:, 3 * hidden:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        caches.append((xt, h, c, i, f, o, g, tc))
        h, c = o * tc, c_new
    return h, caches


def lstm_sequence_backward(p: dict, caches, dh: np.ndarray) -> dict:
    g_all = {k: np.zeros_like(p[k]) for k in LSTM_KEYS}
    dc = np.zeros_like(dh)
    for xt, h_prev, c_prev, i, f, o, g, tc in reversed(caches):
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [dc * g * i * (1 - i), dc * c_prev * f * (1 - f), do * o * (1 - o), dc * i * (1 - g * g)],
            axis=1,
        )
        g_all["Wx"] += xt.T @ dz
        g_all["Wh"] += h_prev.T @ dz
        g_all["b"] += dz.sum(axis=0)
        dh = dz @ p["Wh"].T
        dc = dc * f
    return g_all


def lstm_forward(p: dict, seq: np.ndarray, use_batchnorm: bool, eps: float, running=None):
    """Full forward pass.  ``running=None`` means training-mode batch norm."""
    h, caches = lstm_sequence(p, seq)
    bn_cache = None
    if use_batchnorm:
        if running is None:
            h, bn_cache = batchnorm_forward(h, p["gamma"], p["beta"], eps)
        else:
            mean, var = running
            h = p["gamma"] * (h - mean) / np.sqrt(var + eps) + p["beta"]
    logits, head_cache = head_forward(p, h)
    return logits, (caches, bn_cache, head_cache)


def lstm_loss_and_grad(p: dict, seq: np.ndarray, y: np.ndarray, use_batchnorm: bool, eps: float = 1e-5,
                       w: np.ndarray | None = None):
    logits, (caches, bn_cache, head_cache) = lstm_forward(p, seq, use_batchnorm, eps)
    loss, dlogits = cross_entropy(logits, y, w)
    grads, dh = head_backward(p, head_cache, dlogits)
    if use_batchnorm:
        dh, g_bn = batchnorm_backward(dh, p["gamma"], bn_cache)
        grads.update(g_bn)
    grads.update(lstm_sequence_backward(p, caches, dh))
    return loss, grads, bn_cache


# ---------------------------------------------------------------- models

@dataclass(eq=False)
class DenseNet:
    params: dict = field(repr=False)
    threshold: float = 0.3
    scaler: FeatureScaler | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        logits, _ = head_forward(self.params, apply_scaler(self.scaler, features))
        return softmax(logits)[:, 1]


@dataclass(eq=False)
class LstmNet:
    params: dict = field(repr=False)
    use_batchnorm: bool = False
    bn_epsilon: float = 1e-5
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None
    threshold: float = 0.3
    scaler: FeatureScaler | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        running = (self.running_mean, self.running_var) if self.use_batchnorm else None
        logits, _ = lstm_forward(self.params, apply_scaler(self.scaler, features), self.use_batchnorm,
                                 self.bn_epsilon, running)
        return softmax(logits)[:, 1]


# ---------------------------------------------------------------- training

class Adam:
    def __init__(self, params: dict, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def minibatches(n: int, batch_size: int, gen: np.random.Generator) -> list[np.ndarray]:
    """Shuffled batches; a trailing singleton batch is merged into its predecessor."""
    order = gen.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


def _fit(params: dict, step_fn: Callable, n: int, cfg: TrainConfig, gen: np.random.Generator) -> list[float]:
    opt = Adam(params, cfg.learning_rate)
    history = []
    for epoch in range(cfg.epochs):
        losses, sizes = [], []
        for batch in minibatches(n, cfg.batch_size, gen):
            loss, grads = step_fn(batch)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"loss became {loss} at epoch {epoch}; lower learning_rate (now {cfg.learning_rate})"
                )
            opt.step(params, grads)
            losses.append(loss)
            sizes.append(len(batch))
        history.append(float(np.average(losses, weights=sizes)))
    return history


def _prepare(train, cfg: TrainConfig):
    x_raw, y = np.asarray(train.features, dtype=np.float64), np.asarray(train.theta, dtype=np.int64)
    if len(y) == 0:
        raise TrainingError("empty training set")
    scaler = fit_scaler(x_raw) if cfg.standardize else None
    return apply_scaler(scaler, x_raw), y, class_weights(y, cfg.class_weight), scaler


def train_dense(train, cfg: TrainConfig) -> DenseNet:
    x, y, w, scaler = _prepare(train, cfg)
    params = init_head(rngmod.stream(cfg.rng_seed, _UNIT["nn"], _INIT_SUB), x.shape[1], cfg.hidden1, cfg.hidden2)
    gen = rngmod.stream(cfg.rng_seed, _UNIT["nn"], _SHUFFLE_SUB)
    history = _fit(params, lambda b: dense_loss_and_grad(params, x[b], y[b], w[b]), len(y), cfg, gen)
    return DenseNet(params, cfg.class1_threshold, scaler, history)


def train_lstm(train, cfg: TrainConfig, use_batchnorm: bool = False) -> LstmNet:
    x, y, w, scaler = _prepare(train, cfg)
    if use_batchnorm and (cfg.batch_size < 2 or len(y) < 2):
        raise TrainingError("batch normalisation needs batch_size >= 2 and at least two training rows")
    unit = _UNIT["lstm-bn" if use_batchnorm else "lstm"]
    params = init_lstm(rngmod.stream(cfg.rng_seed, unit, _INIT_SUB), cfg.lstm_hidden, cfg.hidden1, cfg.hidden2,
                       use_batchnorm)
    gen = rngmod.stream(cfg.rng_seed, unit, _SHUFFLE_SUB)
    model = LstmNet(params, use_batchnorm, cfg.bn_epsilon, threshold=cfg.class1_threshold, scaler=scaler)
    if use_batchnorm:
        model.running_mean = np.zeros(cfg.lstm_hidden)
        model.running_var = np.ones(cfg.lstm_hidden)
    mom = cfg.bn_momentum

    def step(batch):
        loss, grads, bn_cache = lstm_loss_and_grad(params, x[batch], y[batch], use_batchnorm, cfg.bn_epsilon,
                                                   w[batch])
        if bn_cache is not None:
            _, _, mu, var = bn_cache
            model.running_mean = mom * model.running_mean + (1 - mom) * mu
            model.running_var = mom * model.running_var + (1 - mom) * var
        return loss, grads

    model.loss_history = _fit(params, step, len(y), cfg, gen)
    return model
