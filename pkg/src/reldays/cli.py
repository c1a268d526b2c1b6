"""Command-line entry point: ``reldays <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
from pathlib import Path

from .dataset import ingest_csv, read_holidays, write_csv
from .errors import DataError, ReldaysError
from .pipeline import RunConfig, forecast_for, load_inputs, run, sweep_k
from .report import emit_comparison, emit_report, predictions_csv
from .selector import select_for_date
from .synthetic import generate_synthetic, write_corpus

log = logging.getLogger("reldays")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}")


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("--data", type=Path, required=True)
        p.add_argument("--holidays", type=Path)
    p.add_argument("--profiles", type=Path, required=True)
    p.add_argument("--forecasts", type=Path)
    p.add_argument("--forecast-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)


def _run_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", default=None, help="preset (relevant, whole, relevant-desk, whole-desk) or a JSON grid file")
    p.add_argument("--test-start", type=_date)
    p.add_argument("--test-end", type=_date)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out", type=Path, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reldays", description="Day-ahead building load forecasting with DTW-selected training days.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and clean a raw CSV")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--holidays", type=Path)
    p.add_argument("--out", type=Path, help="write the cleaned series here")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--days", type=int, default=182)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--forecast-noise", type=float, default=0.0)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("select", help="rank candidate days for one date without training")
    _common(p)
    p.add_argument("--date", type=_date, required=True)
    p.add_argument("--k", type=int, default=12)

    p = sub.add_parser("run", help="train and predict over a test period")
    _common(p)
    _run_opts(p)
    p.add_argument("--mode", choices=("relevant", "whole"), default="relevant")
    p.add_argument("--k", type=int, default=12)

    p = sub.add_parser("sweep-k", help="relevant-mode runs for a range of k")
    _common(p)
    _run_opts(p)
    p.add_argument("--k-min", type=int, default=5)
    p.add_argument("--k-max", type=int, default=20)

    p = sub.add_parser("report", help="summarise emitted runs")
    p.add_argument("--compare", nargs=2, type=Path, metavar=("RELEVANT_DIR", "WHOLE_DIR"), required=True)
    p.add_argument("--out", type=Path)
    return parser


def _config(args, mode: str, k: int) -> RunConfig:
    extra = {"max_iter": args.max_iter} if args.max_iter else {}
    return RunConfig(
        data=args.data, profiles=args.profiles, forecasts=args.forecasts, mode=mode, k=k, grid=args.grid,
        test_start=args.test_start, test_end=args.test_end, seed=args.seed, out=args.out, workers=args.workers,
        holidays=args.holidays, folds=args.folds, forecast_noise=args.forecast_noise, **extra,
    )


def cmd_ingest(args) -> None:
    holidays = read_holidays(args.holidays) if args.holidays else frozenset()
    ds = ingest_csv(args.data, holidays=holidays)
    first, last = ds.span()
    complete = sum(d.complete for d in ds.days)
    print(f"{len(ds.days)} days {first}..{last}, {complete} complete")
    if args.out:
        write_csv(ds, args.out)


def cmd_synth(args) -> None:
    corpus = generate_synthetic(args.days, seed=args.seed)
    paths = write_corpus(corpus, args.out, forecast_noise_sd=args.forecast_noise, seed=args.seed)
    for name, path in paths.items():
        print(f"{name}: {path}")


def cmd_select(args) -> None:
    cfg = RunConfig(data=args.data, profiles=args.profiles, forecasts=args.forecasts, holidays=args.holidays,
                    k=args.k, seed=args.seed, forecast_noise=args.forecast_noise)
    dataset, _ = load_inputs(cfg)
    sel = select_for_date(args.date, dataset, forecast_for(args.date, dataset, cfg), k=args.k)
    for rank, (date, dist) in enumerate(sel.ranked, start=1):
        print(f"{rank:3d}  {date}  {dist:.4f}")


def cmd_run(args) -> None:
    cfg = _config(args, args.mode, args.k)
    report = run(cfg)
    emit_report(report, args.out)
    agg = report.aggregate()
    print(f"{report.mode}: {agg['n_days']} days scored, {agg['n_skipped']} skipped, R2 {agg['r2']}, RMSE {agg['rmse']}")


def cmd_sweep(args) -> None:
    cfg = _config(args, "relevant", args.k_min)
    dataset, profiles = load_inputs(cfg)
    rows, best = sweep_k(cfg, range(args.k_min, args.k_max + 1), dataset, profiles)
    write_sweep(rows, best, args.out)
    print(f"best k = {best}")


def write_sweep(rows, best, out: Path) -> None:
    """``sweep_k.csv`` plus one predictions file per k under ``k_XX/``."""
    lines = ["k,mean_r2,mean_rmse,r2,rmse"]
    fmt = lambda v: "" if v is None else repr(float(v))
    for row in rows:
        lines.append(f"{row.k},{fmt(row.mean_r2)},{fmt(row.mean_rmse)},{fmt(row.r2)},{fmt(row.rmse)}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_k.csv").write_text("\n".join(lines) + "\n")
    (out / "best_k.json").write_text(json.dumps({"best_k": best}) + "\n")
    for row in rows:
        sub = out / f"k_{row.k:02d}"
        sub.mkdir(exist_ok=True)
        (sub / "predictions.csv").write_text(predictions_csv(row.report))


def cmd_report(args) -> None:
    print(emit_comparison(*args.compare, out=args.out), end="")


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "select": cmd_select,
    "run": cmd_run,
    "sweep-k": cmd_sweep,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (ReldaysError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
