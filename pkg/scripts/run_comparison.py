"""Relevant-days vs whole-data comparison on a synthetic corpus.

Writes the corpus, both run reports and a comparison table under --out.
Defaults are the desk-scale settings: a 182-day corpus, the last 30 days as
test period, the thinned grids and a 100k iteration cap per fit.
"""

import argparse
import datetime as dt
import logging
import time
from pathlib import Path

from reldays.dataset import ingest_csv
from reldays.features import load_profiles
from reldays.pipeline import RunConfig, run_relevant, run_whole
from reldays.report import emit_comparison, emit_report
from reldays.synthetic import generate_synthetic, write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/comparison"))
    ap.add_argument("--days", type=int, default=182)
    ap.add_argument("--test-days", type=int, default=30)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--k", type=int, default=12)
    ap.add_argument("--relevant-grid", default="relevant-desk")
    ap.add_argument("--whole-grid", default="whole-desk")
    ap.add_argument("--max-iter", type=int, default=100_000)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    paths = write_corpus(generate_synthetic(args.days, seed=args.seed), args.out / "corpus")
    dataset = ingest_csv(paths["data"])
    profiles = load_profiles(paths["profiles"])
    last = dataset.days[-1].date
    common = dict(
        k=args.k, test_start=last - dt.timedelta(days=args.test_days - 1), test_end=last,
        seed=args.seed, max_iter=args.max_iter, workers=args.workers,
    )
    for mode, grid, fn in (("relevant", args.relevant_grid, run_relevant), ("whole", args.whole_grid, run_whole)):
        t0 = time.perf_counter()
        report = fn(RunConfig(mode=mode, grid=grid, **common), dataset, profiles)
        emit_report(report, args.out / mode)
        logging.info("%s done in %.0f s", mode, time.perf_counter() - t0)
    print(emit_comparison(args.out / "relevant", args.out / "whole", args.out), end="")


if __name__ == "__main__":
    main()
