"""Train every classifier on the standard train/test ranges and print the classification tables.

Usage: python scripts/reproduce_tables.py [--data CSV] [--seed N] [--k PERCENT]
"""

import argparse
from pathlib import Path

from bns_refined.learners import DISPLAY_NAMES, MODEL_NAMES, TrainConfig, predict_theta, train_model
from bns_refined.market_data import load_csv
from bns_refined.metrics import render_table, report
from bns_refined.windowing import label_series, split_by_date

DEFAULT_DATA = Path(__file__).resolve().parents[1] / "data" / "wti_spot_2009-06-01_2019-01-03.csv"

# (train range, test range) pairs, inclusive indices.
RANGES = [
    ((100, 500), (501, 600)),
    ((100, 600), (601, 800)),
    ((300, 800), (801, 1000)),
    ((1000, 1400), (1401, 1500)),
    ((1200, 1500), (1501, 1600)),
    ((1600, 2100), (2101, 2200)),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(DEFAULT_DATA))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--k", type=float, default=2.0)
    args = ap.parse_args()

    series = load_csv(args.data)
    ds = label_series(series, args.k)
    cfg = TrainConfig(rng_seed=args.seed)
    for train_r, test_r in RANGES:
        if test_r[1] >= len(series):
            print(f"skip test {test_r[0]}-{test_r[1]}: beyond the last index {len(series) - 1}")
            continue
        train, test = split_by_date(ds, series, train_r, test_r)
        reports = {}
        for name in MODEL_NAMES:
            _, pred = predict_theta(train_model(name, train, cfg), test)
            reports[DISPLAY_NAMES[name]] = report(test.theta, pred)
        print(f"\ntrain {train_r[0]}-{train_r[1]}, test {test_r[0]}-{test_r[1]} ({len(train)} / {len(test)} rows)")
        print(render_table(reports))


if __name__ == "__main__":
    main()
