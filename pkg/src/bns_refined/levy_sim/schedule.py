from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

TRADING_DAY = 1.0 / 252.0


@dataclass(frozen=True)
class ThetaSchedule:
    """Right-continuous piecewise-constant theta(t).

    ``values[j]`` holds on ``[breakpoints[j], breakpoints[j+1])``; the last
    value holds to the horizon.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    source: str = "constant"

    def __post_init__(self):
        bp, vals = tuple(map(float, self.breakpoints)), tuple(map(float, self.values))
        if not bp or len(bp) != len(vals):
            raise ValueError("breakpoints and values must be non-empty and of equal length")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError("theta values must lie in [0, 1]")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, theta: float) -> "ThetaSchedule":
        return cls((0.0,), (theta,), "constant")

    def value_at(self, t: float) -> float:
        return float(self.on_grid(np.array([t]))[0])

    def on_grid(self, times: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """theta at each time; times within ``tol`` (relative to a day) of a breakpoint count as past it."""
        t = np.asarray(times, dtype=np.float64) + tol * TRADING_DAY
        j = np.searchsorted(np.array(self.breakpoints), t, side="right") - 1
        return np.array(self.values)[np.maximum(j, 0)]

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values), "source": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaSchedule":
        return cls(tuple(d["breakpoints"]), tuple(d["values"]), d.get("source", "constant"))


def schedule_from_predictions(
    predictions: Sequence[tuple[int, float]],
    mode: str = "hard",
    horizon_days: int = 7,
    threshold: float = 0.3,
    origin: int = 0,
    day: float = TRADING_DAY,
) -> ThetaSchedule:
    """Turn per-day classifier outputs into a theta schedule.

    Each ``(index, prob)`` sets theta on days ``index .. index+horizon_days-1``
    (shifted by ``origin``): to ``prob`` in ``soft`` mode, or to 1/0 by
    ``prob > threshold`` in ``hard`` mode.  Later predictions overwrite
    earlier ones; uncovered days get theta = 0.
    """
    if not predictions:
        raise ValueError("no predictions")
    if mode not in ("hard", "soft"):
        raise ValueError(f"unknown mode {mode!r}")
    if horizon_days < 1:
        raise ValueError("horizon_days must be >= 1")
    idx = np.array([int(p[0]) for p in predictions]) - origin
    prob = np.array([float(p[1]) for p in predictions])
    if np.any(np.diff(idx) <= 0):
        raise ValueError("prediction indices must be strictly increasing")
    if idx[0] < 0:
        raise ValueError("prediction index before origin")
    vals = prob if mode == "soft" else (prob > threshold).astype(np.float64)
    daily = np.zeros(int(idx[-1]) + horizon_days + 1)
    for i, v in zip(idx, vals):
        daily[i:i + horizon_days] = v
    change = np.flatnonzero(np.diff(daily)) + 1
    starts = np.concatenate([[0], change])
    return ThetaSchedule(tuple(starts * day), tuple(daily[starts]), f"classifier-{mode}")
