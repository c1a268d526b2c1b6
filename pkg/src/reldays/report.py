"""Report files for a run and the two-mode comparison table.

Everything except ``timing.json`` is a deterministic function of the run's
inputs, so repeated runs give byte-identical files. Wall-clock numbers live
in ``timing.json`` alone.
"""

from __future__ import annotations

import datetime as dt
import json
import math
from pathlib import Path

import numpy as np

from .dataset import SLOT_MINUTES, SLOTS_PER_DAY, TIMESTAMP_FORMAT
from .errors import EmptyReport, IoFailure
from .pipeline import PredictionReport

PREDICTIONS = "predictions.csv"
METRICS = "metrics.json"
PLOT = "actual_vs_predicted.csv"
TIMING = "timing.json"
SUMMARY = "comparison.txt"
CLASSES = ("Working", "Weekend")


def _num(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _stamps(date: dt.date) -> list[str]:
    origin = dt.datetime.combine(date, dt.time())
    return [(origin + dt.timedelta(minutes=SLOT_MINUTES * s)).strftime(TIMESTAMP_FORMAT) for s in range(SLOTS_PER_DAY)]


def _predicted(report: PredictionReport):
    return [d for d in report.days if d.y_pred is not None]


def predictions_csv(report: PredictionReport) -> str:
    lines = ["timestamp,y_true,y_pred"]
    for day in _predicted(report):
        truth = day.y_true if day.y_true is not None else [None] * SLOTS_PER_DAY
        for ts, yt, yp in zip(_stamps(day.date), truth, day.y_pred):
            lines.append(f"{ts},{_num(yt)},{_num(yp)}")
    return "\n".join(lines) + "\n"


def plot_csv(report: PredictionReport) -> str:
    lines = ["date,day_type,slot,hour,y_true,y_pred"]
    for day in _predicted(report):
        truth = day.y_true if day.y_true is not None else [None] * SLOTS_PER_DAY
        for slot, (yt, yp) in enumerate(zip(truth, day.y_pred)):
            lines.append(f"{day.date.isoformat()},{day.day_type},{slot},{slot * SLOT_MINUTES / 60:.2f},{_num(yt)},{_num(yp)}")
    return "\n".join(lines) + "\n"


def metrics_dict(report: PredictionReport) -> dict:
    aggregates = {"All": report.aggregate()}
    for coarse in CLASSES:
        aggregates[coarse] = report.aggregate(coarse)
    days = []
    for d in report.days:
        days.append(
            {
                "date": d.date.isoformat(),
                "day_type": d.day_type,
                "class": d.coarse,
                "status": d.status,
                "params": d.params.as_dict() if d.params else None,
                "selected": [[s.isoformat(), float(dist)] for s, dist in d.selected],
                "r2": _clean(d.r2),
                "rmse": _clean(d.rmse),
                "n_train_rows": d.n_train_rows,
                "capped": d.capped,
            }
        )
    models = [
        {"key": m.key, "params": m.params.as_dict(), "n_rows": m.n_rows, "capped": m.capped, "n_support": m.n_support}
        for m in report.models
    ]
    return {
        "mode": report.mode,
        "k": report.k,
        "aggregate": {k: {f: _clean(v) for f, v in agg.items()} for k, agg in aggregates.items()},
        "days": days,
        "models": models,
    }


def timing_dict(report: PredictionReport) -> dict:
    out = {"mode": report.mode, "total_seconds": report.train_seconds()}
    for coarse in CLASSES:
        out[f"{coarse.lower()}_seconds"] = report.train_seconds(coarse)
    out["per_day"] = {d.date.isoformat(): d.train_seconds for d in report.days}
    out["per_model"] = {m.key: m.train_seconds for m in report.models}
    return out


def _write_all(files: dict[Path, str]) -> dict[str, Path]:
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
    except OSError as exc:
        raise IoFailure(f"cannot write report: {exc}") from exc
    return {p.name: p for p in files}


def emit_report(report: PredictionReport, out_dir: str | Path) -> dict[str, Path]:
    """Write predictions, metrics, plot data and timing; nothing is written for an empty report."""
    if not _predicted(report):
        raise EmptyReport(f"{report.mode} report has no predicted days")
    out = Path(out_dir)
    files = {
        out / PREDICTIONS: predictions_csv(report),
        out / METRICS: _dump(metrics_dict(report)),
        out / PLOT: plot_csv(report),
        out / TIMING: _dump(timing_dict(report)),
    }
    return _write_all(files)


def read_predictions(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Scored rows of a predictions CSV as (y_true, y_pred)."""
    truth, pred = [], []
    for line in Path(path).read_text().splitlines()[1:]:
        _, yt, yp = line.split(",")
        if yt:
            truth.append(float(yt))
            pred.append(float(yp))
    return np.array(truth), np.array(pred)


def load_summary(run_dir: str | Path) -> dict:
    """Metrics plus timing of an emitted run, for comparison tables."""
    run_dir = Path(run_dir)
    try:
        metrics = json.loads((run_dir / METRICS).read_text())
        timing = json.loads((run_dir / TIMING).read_text())
    except (OSError, ValueError) as exc:
        raise IoFailure(f"{run_dir}: cannot read report: {exc}") from exc
    return {"metrics": metrics, "timing": timing}


def _cell(value, fmt) -> str:
    return "n/a" if value is None else format(value, fmt)


def comparison_table(relevant: dict, whole: dict) -> str:
    """Relevant vs whole, working vs weekend: R2, RMSE and training seconds."""
    cols = [(name, run, c) for name, run in (("relevant", relevant), ("whole", whole)) for c in CLASSES]
    header = ["", *[f"{name}/{c.lower()}" for name, _, c in cols]]
    rows = [
        ["R2 (pooled)", *[_cell(run["metrics"]["aggregate"][c]["r2"], ".3f") for _, run, c in cols]],
        ["R2 (mean of days)", *[_cell(run["metrics"]["aggregate"][c]["mean_r2"], ".3f") for _, run, c in cols]],
        ["RMSE (kW)", *[_cell(run["metrics"]["aggregate"][c]["rmse"], ".1f") for _, run, c in cols]],
        ["training time (s)", *[_cell(run["timing"][f"{c.lower()}_seconds"], ".1f") for _, run, c in cols]],
        ["days scored", *[str(run["metrics"]["aggregate"][c]["n_days"]) for _, run, c in cols]],
    ]
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    fmt = lambda r: "  ".join(v.ljust(widths[0]) if i == 0 else v.rjust(widths[i]) for i, v in enumerate(r))
    return "\n".join(fmt(r) for r in [header, *rows]) + "\n"


def emit_comparison(relevant_dir: str | Path, whole_dir: str | Path, out: str | Path | None = None) -> str:
    text = comparison_table(load_summary(relevant_dir), load_summary(whole_dir))
    if out is not None:
        _write_all({Path(out) / SUMMARY: text})
    return text
