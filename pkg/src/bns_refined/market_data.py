"""Daily close-price series: loading, validation, summary statistics, plot data."""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

DEFAULT_SCHEMA = {"date": "Date", "close": "Close"}
PLOT_KINDS = ("close", "yearly-box", "histogram-change", "histogram-pct")


class DataError(ValueError):
    """Raised for malformed or invalid price data."""


@dataclass(frozen=True)
class PriceRecord:
    date: dt.date
    index: int
    close: float


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Validated close prices on consecutive available trading days.

    Index ``i`` is simply the position of the record; non-trading days are
    absent rather than filled.
    """

    dates: tuple[dt.date, ...]
    closes: np.ndarray = field(repr=False)

    def __post_init__(self):
        closes = np.array(self.closes, dtype=np.float64)
        if closes.ndim != 1 or len(closes) != len(self.dates):
            raise DataError("dates and closes must be 1-d sequences of equal length")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(closes) & (closes > 0)))[0])
            raise DataError(f"close at index {bad} is not a positive finite number")
        for i in range(1, len(self.dates)):
            if self.dates[i] <= self.dates[i - 1]:
                raise DataError(f"dates not strictly increasing at index {i}: {self.dates[i]}")
        closes.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.closes)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(len(self))

    def records(self) -> Iterator[PriceRecord]:
        for i, (d, c) in enumerate(zip(self.dates, self.closes)):
            yield PriceRecord(d, i, float(c))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PriceSeries):
            return NotImplemented
        return self.dates == other.dates and np.array_equal(self.closes, other.closes)

    @classmethod
    def from_closes(cls, closes: Sequence[float], start: dt.date = dt.date(2000, 1, 3)) -> "PriceSeries":
        """Build a series on consecutive business days starting at ``start``."""
        days = np.busday_offset(np.datetime64(start, "D"), np.arange(len(closes)), roll="forward")
        return cls(tuple(d.astype(dt.date) for d in days), np.asarray(closes, dtype=np.float64))

    def slice(self, start: int, stop: int) -> "PriceSeries":
        return PriceSeries(self.dates[start:stop], self.closes[start:stop])


def load_csv(path: str | Path, schema: Mapping[str, str] | None = None) -> PriceSeries:
    """Read a CSV with a header row into a :class:`PriceSeries`.

    ``schema`` maps ``"date"`` and ``"close"`` to column names.  Rows are
    sorted by date before indices are assigned.  Errors name the offending
    line (1-based, header is line 1).
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    rows: list[tuple[dt.date, float, int]] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        for key in ("date", "close"):
            if schema[key] not in reader.fieldnames:
                raise DataError(f"{path}: missing column {schema[key]!r} (have {reader.fieldnames})")
        for line, row in enumerate(reader, start=2):
            raw_date, raw_close = row[schema["date"]], row[schema["close"]]
            try:
                day = dt.date.fromisoformat((raw_date or "").strip())
            except ValueError:
                raise DataError(f"{path}:{line}: unparsable date {raw_date!r}") from None
            try:
                close = float(raw_close)
            except (TypeError, ValueError):
                raise DataError(f"{path}:{line}: non-numeric close {raw_close!r}") from None
            if not math.isfinite(close) or close <= 0:
                raise DataError(f"{path}:{line}: close must be positive and finite, got {raw_close!r}")
            rows.append((day, close, line))
    rows.sort(key=lambda r: r[0])
    for prev, cur in zip(rows, rows[1:]):
        if cur[0] == prev[0]:
            raise DataError(f"{path}:{cur[2]}: duplicate date {cur[0]} (also on line {prev[2]})")
    return PriceSeries(tuple(r[0] for r in rows), np.array([r[1] for r in rows], dtype=np.float64))


def write_csv(series: PriceSeries, path: str | Path, schema: Mapping[str, str] | None = None) -> Path:
    """Write the series so that :func:`load_csv` reads it back exactly."""
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema["date"], "index", schema["close"]])
        for rec in series.records():
            w.writerow([rec.date.isoformat(), rec.index, repr(rec.close)])
    return path


@dataclass(frozen=True)
class SeriesStats:
    mean_change: float
    median_change: float
    max_change: float
    min_change: float
    mean_pct: float
    median_pct: float
    max_pct: float
    min_pct: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def daily_changes(series: PriceSeries) -> tuple[np.ndarray, np.ndarray]:
    """Return (USD change, percent change) for t = 1..n-1."""
    c = series.closes
    change = c[1:] - c[:-1]
    return change, 100.0 * change / c[:-1]


def summary_stats(series: PriceSeries) -> SeriesStats:
    if len(series) < 2:
        raise DataError("need at least two closes for daily changes")
    change, pct = daily_changes(series)
    return SeriesStats(
        mean_change=float(np.mean(change)),
        median_change=float(np.median(change)),
        max_change=float(np.max(change)),
        min_change=float(np.min(change)),
        mean_pct=float(np.mean(pct)),
        median_pct=float(np.median(pct)),
        max_pct=float(np.max(pct)),
        min_pct=float(np.min(pct)),
    )


def _yearly_box(series: PriceSeries) -> list[list]:
    years = np.array([d.year for d in series.dates])
    rows = []
    for year in np.unique(years):
        v = series.closes[years == year]
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        rows.append([int(year), len(v), v.min(), q1, med, q3, v.max()])
    return rows


def emit_plot_data(series: PriceSeries, kind: str, path: str | Path, bins: int = 60) -> Path:
    """Write plot-ready CSV data for one of :data:`PLOT_KINDS`.

    ``close`` writes one row per record; ``yearly-box`` writes five-number
    summaries per calendar year; the histogram kinds write
    ``bin_low, bin_high, count`` rows whose counts sum to ``len(series) - 1``.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    path = Path(path)
    if kind == "close":
        return write_csv(series, path)
    if kind == "yearly-box":
        header = ["year", "count", "min", "q1", "median", "q3", "max"]
        rows = _yearly_box(series)
    else:
        if bins < 1:
            raise ValueError("bins must be >= 1")
        change, pct = daily_changes(series)
        values = change if kind == "histogram-change" else pct
        counts, edges = np.histogram(values, bins=bins)
        header = ["bin_low", "bin_high", "count"]
        rows = [[edges[i], edges[i + 1], int(counts[i])] for i in range(bins)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path
