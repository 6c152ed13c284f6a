from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields


class TrainingError(RuntimeError):
    """Training diverged (non-finite loss) or was given unusable data."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by the five classifiers.

    ``learning_rate``/``epochs``/``batch_size`` drive the minibatch networks;
    logistic regression is fitted full-batch with its own step and epoch count.
    ``max_depth=None`` grows trees until leaves are pure.
    """

    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 32
    hidden1: int = 16
    hidden2: int = 16
    lstm_hidden: int = 16
    trees_count: int = 200
    max_depth: int | None = 8
    features_per_split: int = math.ceil(math.sqrt(7))
    bootstrap: bool = True
    rng_seed: int = 0
    bn_epsilon: float = 1e-5
    bn_momentum: float = 0.99
    class1_threshold: float = 0.3
    baseline_threshold: float = 0.5
    logistic_learning_rate: float = 0.1
    logistic_epochs: int = 1000
    class_weight: str | None = None
    standardize: bool = True

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ValueError("invalid TrainConfig: " + "; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        for name in ("learning_rate", "epochs", "batch_size", "hidden1", "hidden2", "lstm_hidden",
                     "trees_count", "bn_epsilon", "logistic_learning_rate", "logistic_epochs"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            errors.append("max_depth must be >= 1 or None")
        if not 1 <= self.features_per_split <= 7:
            errors.append("features_per_split must be in 1..7")
        if self.rng_seed < 0:
            errors.append("rng_seed must be non-negative")
        for name in ("class1_threshold", "baseline_threshold", "bn_momentum"):
            if not 0 < getattr(self, name) < 1:
                errors.append(f"{name} must lie in (0, 1)")
        if self.class_weight not in (None, "balanced"):
            errors.append("class_weight must be null or 'balanced'")
        return errors

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown TrainConfig fields: {sorted(unknown)}")
        return cls(**data)
