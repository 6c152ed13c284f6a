"""Big-jump detection and the 7-close sliding-window dataset with target theta."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .market_data import PriceSeries

WINDOW = 7
HORIZON = 7
MIN_JUMPS = 2


@dataclass(frozen=True)
class JumpSet:
    """Indices ``t >= 1`` where the close fell by at least ``k_percent`` percent."""

    k_percent: float
    jump_indices: frozenset[int]

    def indicator(self, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=bool)
        if self.jump_indices:
            out[sorted(self.jump_indices)] = True
        return out


def drop_percent(closes: np.ndarray) -> np.ndarray:
    """Percentage drop from the previous close, for t = 1..n-1 (rises are negative)."""
    return 100.0 * (closes[:-1] - closes[1:]) / closes[:-1]


def detect_jumps(series: PriceSeries, k_percent: float) -> JumpSet:
    if not k_percent > 0:
        raise ValueError(f"k_percent must be positive, got {k_percent}")
    if len(series) < 2:
        raise ValueError("need at least two closes to detect jumps")
    hits = np.flatnonzero(drop_percent(series.closes) >= k_percent) + 1
    return JumpSet(float(k_percent), frozenset(int(i) for i in hits))


@dataclass(frozen=True, eq=False)
class WindowDataset:
    """Rows of ``WINDOW`` consecutive closes keyed by the first close's index.

    ``theta[r] == 1`` iff at least two big jumps fall in the ``HORIZON`` days
    following the window, i.e. indices ``start+7 .. start+13``.
    """

    features: np.ndarray = field(repr=False)
    start_index: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    k_percent: float
    window_len: int = WINDOW
    horizon: int = HORIZON

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64).reshape(-1, self.window_len)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "start_index", np.asarray(self.start_index, dtype=np.int64))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.int64))
        if not (len(feats) == len(self.start_index) == len(self.theta)):
            raise ValueError("features, start_index and theta lengths differ")

    def __len__(self) -> int:
        return len(self.theta)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WindowDataset):
            return NotImplemented
        return (
            self.k_percent == other.k_percent
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.start_index, other.start_index)
            and np.array_equal(self.theta, other.theta)
        )

    def subset(self, mask: np.ndarray) -> "WindowDataset":
        return WindowDataset(self.features[mask], self.start_index[mask], self.theta[mask], self.k_percent)

    def support(self) -> tuple[int, int]:
        ones = int(self.theta.sum())
        return len(self) - ones, ones

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"close_{j}" for j in range(self.window_len)] + ["start_index", "theta"])
            for row, start, th in zip(self.features, self.start_index, self.theta):
                w.writerow([repr(float(v)) for v in row] + [int(start), int(th)])
        return path

    @classmethod
    def from_csv(cls, path: str | Path, k_percent: float) -> "WindowDataset":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [list(map(float, r)) for r in reader]
        width = len(header) - 2
        arr = np.array(rows, dtype=np.float64).reshape(-1, width + 2)
        return cls(arr[:, :width], arr[:, width].astype(np.int64), arr[:, width + 1].astype(np.int64), k_percent)


def build_dataset(series: PriceSeries, jumps: JumpSet) -> WindowDataset:
    n = len(series)
    span = WINDOW + HORIZON
    if n < span:
        return WindowDataset(np.empty((0, WINDOW)), np.empty(0, np.int64), np.empty(0, np.int64), jumps.k_percent)
    if jumps.jump_indices and max(jumps.jump_indices) >= n:
        raise ValueError("jump set does not belong to this series")
    n_rows = n - span + 1
    cum = np.concatenate([[0], np.cumsum(jumps.indicator(n))])
    starts = np.arange(n_rows)
    in_horizon = cum[starts + span] - cum[starts + WINDOW]
    feats = sliding_window_view(series.closes, WINDOW)[:n_rows]
    return WindowDataset(feats.copy(), starts, (in_horizon >= MIN_JUMPS).astype(np.int64), jumps.k_percent)


def label_series(series: PriceSeries, k_percent: float = 2.0) -> WindowDataset:
    return build_dataset(series, detect_jumps(series, k_percent))


def split_by_date(
    dataset: WindowDataset,
    series: PriceSeries,
    train_range: tuple[int, int] | None,
    test_range: tuple[int, int] | None,
    convention: str = "boundary",
) -> tuple[WindowDataset, WindowDataset]:
    """Split rows by start index into train and test sets.

    Ranges are inclusive ``(first, last)`` index pairs, ``None`` meaning empty.
    Under ``convention="boundary"`` the test split also takes the row keyed at
    ``first - 1`` (the last day of the preceding range), so a test range
    ``501-600`` holds the 101 rows ``500..600``.  That row is removed from
    train so the splits stay disjoint.  ``convention="strict"`` uses the ranges literally.
    """
    if convention not in ("boundary", "strict"):
        raise ValueError(f"unknown convention {convention!r}")
    n = len(series)
    for name, rng in (("train", train_range), ("test", test_range)):
        if rng is None:
            continue
        a, b = rng
        if not (0 <= a <= b < n):
            raise ValueError(f"{name} range {a}:{b} outside series index range 0:{n - 1}")
    if train_range and test_range:
        (a, b), (c, d) = train_range, test_range
        if a <= d and c <= b:
            raise ValueError(f"train range {a}:{b} overlaps test range {c}:{d}")

    s = dataset.start_index
    empty = np.zeros(len(dataset), dtype=bool)
    test_mask = empty.copy()
    if test_range is not None:
        lo, hi = test_range
        if convention == "boundary" and lo > 0:
            lo -= 1
        test_mask = (s >= lo) & (s <= hi)
    train_mask = empty.copy()
    if train_range is not None:
        train_mask = (s >= train_range[0]) & (s <= train_range[1]) & ~test_mask
    return dataset.subset(train_mask), dataset.subset(test_mask)


def parse_range(text: str) -> tuple[int, int] | None:
    """Parse ``"A:B"`` (or ``"A-B"``) into an inclusive pair; empty string -> None."""
    text = text.strip()
    if not text:
        return None
    sep = ":" if ":" in text else "-"
    a, b = text.split(sep)
    return int(a), int(b)
