import csv
import datetime as dt
import hashlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bns_refined.market_data import (DataError, PLOT_KINDS, PriceSeries, daily_changes, emit_plot_data, load_csv,
                                     summary_stats, write_csv)
from oracles import FIXTURE, FIXTURE_SHA256, FIXTURE_STATS, REFERENCE_EXTREMES

closes_st = st.lists(st.floats(0.01, 1e4, allow_nan=False, allow_infinity=False), min_size=2, max_size=60)


def _write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_fixture_checksum():
    assert hashlib.sha256(FIXTURE.read_bytes()).hexdigest() == FIXTURE_SHA256


def test_fixture_stats(wti):
    got = summary_stats(wti).to_dict()
    assert set(got) == set(FIXTURE_STATS)
    for k, v in FIXTURE_STATS.items():
        assert got[k] == pytest.approx(v, rel=1e-9, abs=1e-12), k
    for k, v in REFERENCE_EXTREMES.items():
        assert round(got[k], 2) == v


def test_fixture_shape(wti):
    assert len(wti) == 2415
    assert wti.dates[0] == dt.date(2009, 6, 1)
    assert wti.dates[100] == dt.date(2009, 10, 21)
    assert wti.dates[500] == dt.date(2011, 5, 24)


def test_stats_hand_example():
    s = summary_stats(PriceSeries.from_closes([100.0, 102.0, 99.96]))
    assert s.max_change == pytest.approx(2.0)
    assert s.min_change == pytest.approx(-2.04)
    assert s.mean_pct == pytest.approx(0.0)
    assert s.median_pct == pytest.approx(0.0)


def test_stats_needs_two_closes():
    with pytest.raises(DataError):
        summary_stats(PriceSeries.from_closes([5.0]))


@given(closes_st)
def test_roundtrip(tmp_path_factory, closes):
    s = PriceSeries.from_closes(closes)
    p = tmp_path_factory.mktemp("rt") / "s.csv"
    write_csv(s, p)
    assert load_csv(p) == s


@given(closes_st, st.floats(0.1, 100))
def test_pct_stats_scale_invariant(closes, c):
    a = summary_stats(PriceSeries.from_closes(closes))
    b = summary_stats(PriceSeries.from_closes([c * x for x in closes]))
    for k in ("mean_pct", "median_pct", "max_pct", "min_pct"):
        assert getattr(b, k) == pytest.approx(getattr(a, k), rel=1e-9, abs=1e-9)
    assert b.max_change == pytest.approx(c * a.max_change, rel=1e-9, abs=1e-9)


@settings(max_examples=30)
@given(closes_st, st.integers(1, 80))
def test_histograms_count_every_change(tmp_path_factory, closes, bins):
    s = PriceSeries.from_closes(closes)
    d = tmp_path_factory.mktemp("h")
    for kind in ("histogram-change", "histogram-pct"):
        with emit_plot_data(s, kind, d / "h.csv", bins=bins).open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == bins
        assert sum(int(r["count"]) for r in rows) == len(s) - 1


def test_plot_kinds(tmp_path, wti):
    for kind in PLOT_KINDS:
        p = emit_plot_data(wti, kind, tmp_path / f"{kind}.csv")
        assert p.stat().st_size > 0
    with (tmp_path / "yearly-box.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["year"]) for r in rows] == list(range(2009, 2020))
    assert sum(int(r["count"]) for r in rows) == len(wti)
    for r in rows:
        assert float(r["min"]) <= float(r["q1"]) <= float(r["median"]) <= float(r["q3"]) <= float(r["max"])
    with pytest.raises(ValueError):
        emit_plot_data(wti, "pie", tmp_path / "x.csv")


def test_daily_changes():
    change, pct = daily_changes(PriceSeries.from_closes([50.0, 55.0, 44.0]))
    np.testing.assert_allclose(change, [5.0, -11.0])
    np.testing.assert_allclose(pct, [10.0, -20.0])


def test_custom_schema_and_sorting(tmp_path):
    p = _write(tmp_path, "day,px,vol\n2020-01-03,11,1\n2020-01-02,10,1\n")
    s = load_csv(p, {"date": "day", "close": "px"})
    assert s.dates == (dt.date(2020, 1, 2), dt.date(2020, 1, 3))
    assert s.closes.tolist() == [10.0, 11.0]


@pytest.mark.parametrize("text, needle", [
    ("Date,Price\n2020-01-02,1\n", "missing column 'Close'"),
    ("Date,Close\n2020-13-02,1\n", ":2: unparsable date"),
    ("Date,Close\n2020-01-02,1\n2020-01-03,abc\n", ":3: non-numeric close"),
    ("Date,Close\n2020-01-02,-4\n", ":2: close must be positive"),
    ("Date,Close\n2020-01-02,0\n", ":2: close must be positive"),
    ("Date,Close\n2020-01-02,nan\n", ":2: close must be positive"),
    ("Date,Close\n2020-01-02,1\n2020-01-02,2\n", "duplicate date"),
    ("", "empty file"),
])
def test_load_errors(tmp_path, text, needle):
    with pytest.raises(DataError, match=needle):
        load_csv(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "nope.csv")


def test_series_validation():
    with pytest.raises(DataError):
        PriceSeries((dt.date(2020, 1, 2), dt.date(2020, 1, 2)), np.array([1.0, 2.0]))
    with pytest.raises(DataError):
        PriceSeries((dt.date(2020, 1, 2),), np.array([1.0, 2.0]))
    s = PriceSeries.from_closes([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        s.closes[0] = 5.0
    assert len(s.slice(1, 3)) == 2
    assert [r.index for r in s.records()] == [0, 1, 2]
