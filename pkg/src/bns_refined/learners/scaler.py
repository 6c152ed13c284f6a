from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class FeatureScaler:
    """Per-feature z-score fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["std"], dtype=np.float64))


def fit_scaler(features: np.ndarray) -> FeatureScaler:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("cannot fit a scaler on an empty training set")
    return FeatureScaler(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))


def apply_scaler(scaler: FeatureScaler | None, features: np.ndarray) -> np.ndarray:
    return np.asarray(features, dtype=np.float64) if scaler is None else scaler.transform(features)
