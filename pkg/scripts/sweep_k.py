"""Sweep the number of relevant days k on a validation week.

The validation week is the seven days just before the test month that
run_comparison.py uses, so k is chosen without touching the test days.
Writes sweep_k.csv, best_k.json and per-k predictions under --out.
"""

import argparse
import datetime as dt
import logging
from pathlib import Path

from reldays.cli import write_sweep
from reldays.dataset import ingest_csv
from reldays.features import load_profiles
from reldays.pipeline import RunConfig, sweep_k
from reldays.synthetic import generate_synthetic, write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/sweep"))
    ap.add_argument("--days", type=int, default=182)
    ap.add_argument("--test-days", type=int, default=30)
    ap.add_argument("--validation-days", type=int, default=7)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--k-min", type=int, default=5)
    ap.add_argument("--k-max", type=int, default=20)
    ap.add_argument("--grid", default="relevant-desk")
    ap.add_argument("--max-iter", type=int, default=100_000)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    paths = write_corpus(generate_synthetic(args.days, seed=args.seed), args.out / "corpus")
    dataset = ingest_csv(paths["data"])
    profiles = load_profiles(paths["profiles"])
    end = dataset.days[-1].date - dt.timedelta(days=args.test_days)
    cfg = RunConfig(
        mode="relevant", grid=args.grid, seed=args.seed, max_iter=args.max_iter,
        test_start=end - dt.timedelta(days=args.validation_days - 1), test_end=end,
    )
    rows, best = sweep_k(cfg, range(args.k_min, args.k_max + 1), dataset, profiles)
    write_sweep(rows, best, args.out)
    for row in rows:
        print(f"k={row.k:2d}  mean R2 {row.mean_r2:.4f}  mean RMSE {row.mean_rmse:.2f}")
    print(f"best k: {best}")


if __name__ == "__main__":
    main()
