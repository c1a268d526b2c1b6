"""End-to-end day-ahead runs.

``run_relevant`` trains a fresh model per test day on its k DTW-selected
days; ``run_whole`` trains one model per coarse class (working/weekend) on
all days before the test period. Both return the same report structure.
"""

from __future__ import annotations

import datetime as dt
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import (
    SLOTS_PER_DAY,
    CoarseClass,
    Dataset,
    DayRecord,
    DegenerateColumn,
    classify_day,
    fit_scaler,
    ingest_csv,
    parse_timestamp,
    read_holidays,
)
from .errors import DataError, DegenerateActual, EmptyPool, MissingForecast, MissingHistory
from .features import ProfileConfig, assemble_training_matrix, day_features, load_profiles
from .selector import ShortfallWarning, select_for_date
from .svr import DEFAULT_MAX_ITER, DEFAULT_TOL, SvrParams, predict, train_svr
from .tuning import GridSpec, grid_search, r2, rmse

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    data: Path | None = None
    profiles: Path | None = None
    forecasts: Path | None = None
    mode: str = "relevant"
    k: int = 12
    grid: str | GridSpec | None = None
    test_start: dt.date | None = None
    test_end: dt.date | None = None
    seed: int = 0
    out: Path | None = None
    workers: int = 1
    holidays: Path | None = None
    folds: int = 5
    day_blocked: bool = True
    band: int | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    forecast_noise: float = 0.0

    def __post_init__(self):
        if self.mode not in ("relevant", "whole"):
            raise ValueError(f"mode must be 'relevant' or 'whole', got {self.mode!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    def grid_spec(self) -> GridSpec:
        return GridSpec.resolve(self.grid if self.grid is not None else self.mode)


@dataclass
class DayResult:
    date: dt.date
    day_type: str
    status: str = "ok"
    params: SvrParams | None = None
    selected: list[tuple[dt.date, float]] = field(default_factory=list)
    y_pred: np.ndarray | None = None
    y_true: np.ndarray | None = None
    r2: float | None = None
    rmse: float | None = None
    train_seconds: float = 0.0
    n_train_rows: int = 0
    capped: bool = False

    @property
    def coarse(self) -> str:
        return "Weekend" if self.day_type in ("Saturday", "Sunday") else "Working"

    @property
    def scored(self) -> bool:
        return self.y_pred is not None and self.y_true is not None


@dataclass
class ModelRecord:
    key: str
    params: SvrParams
    n_rows: int
    train_seconds: float
    capped: bool
    n_support: int


@dataclass
class PredictionReport:
    mode: str
    k: int | None
    days: list[DayResult]
    models: list[ModelRecord]

    def scored_days(self, coarse: str | None = None) -> list[DayResult]:
        return [d for d in self.days if d.scored and (coarse is None or d.coarse == coarse)]

    def aggregate(self, coarse: str | None = None) -> dict:
        """Pooled and per-day-mean metrics over scored days."""
        days = self.scored_days(coarse)
        out = {"n_days": len(days), "n_skipped": sum(1 for d in self.days if d.status != "ok")}
        if not days:
            out.update(r2=None, rmse=None, mean_r2=None, mean_rmse=None)
            return out
        y_true = np.concatenate([d.y_true for d in days])
        y_pred = np.concatenate([d.y_pred for d in days])
        try:
            out["r2"] = r2(y_true, y_pred)
        except DegenerateActual:
            out["r2"] = None
        out["rmse"] = rmse(y_true, y_pred)
        per_day = [d.r2 for d in days if d.r2 is not None]
        out["mean_r2"] = float(np.mean(per_day)) if per_day else None
        out["mean_rmse"] = float(np.mean([d.rmse for d in days]))
        return out

    def train_seconds(self, coarse: str | None = None) -> float:
        if self.mode == "whole":
            return sum(m.train_seconds for m in self.models if coarse is None or m.key == coarse)
        return sum(d.train_seconds for d in self.days if coarse is None or d.coarse == coarse)


def read_forecast(path: str | Path) -> np.ndarray:
    rows = Path(path).read_text().splitlines()
    if not rows or [c.strip() for c in rows[0].split(",")] != ["timestamp", "t_out_c"]:
        raise MissingForecast(f"{path}: header must be timestamp,t_out_c")
    values = []
    for lineno, line in enumerate(rows[1:], start=2):
        if not line.strip():
            continue
        ts, _, temp = line.partition(",")
        try:
            parse_timestamp(ts)
            values.append(float(temp))
        except ValueError as exc:
            raise MissingForecast(f"{path}:{lineno}: {exc}") from exc
    if len(values) != SLOTS_PER_DAY:
        raise MissingForecast(f"{path}: expected {SLOTS_PER_DAY} rows, got {len(values)}")
    return np.array(values)


def forecast_for(date: dt.date, dataset: Dataset, config: RunConfig) -> np.ndarray:
    """Forecast file if a directory is configured, else the measured temperatures."""
    if config.forecasts is not None:
        path = Path(config.forecasts) / f"{date.isoformat()}.csv"
        if not path.exists():
            raise MissingForecast(f"{date}: no forecast file {path}")
        return read_forecast(path)
    day = dataset.get(date)
    if day is None:
        raise MissingForecast(f"{date}: no forecast and no measured temperatures")
    temps = np.array(day.t_out)
    if config.forecast_noise > 0:
        rng = np.random.default_rng([config.seed, date.toordinal()])
        temps = temps + rng.normal(0.0, config.forecast_noise, size=SLOTS_PER_DAY)
    return temps


def load_inputs(config: RunConfig) -> tuple[Dataset, ProfileConfig]:
    holidays = read_holidays(config.holidays) if config.holidays else frozenset()
    return ingest_csv(config.data, holidays=holidays), load_profiles(config.profiles)


def test_dates(dataset: Dataset, config: RunConfig) -> list[dt.date]:
    first, last = dataset.span()
    start = config.test_start or first
    end = config.test_end or last
    if start < first or end > last or start > end:
        raise DataError(f"test period {start}..{end} not inside data span {first}..{last}")
    return [start + dt.timedelta(days=i) for i in range((end - start).days + 1)]


def _forecast_day(date: dt.date, dataset: Dataset, temps: np.ndarray) -> DayRecord:
    measured = dataset.get(date)
    load = measured.load if measured is not None else np.full(SLOTS_PER_DAY, np.nan)
    return DayRecord(
        date=date,
        day_type=classify_day(date, dataset.holidays),
        t_out=temps,
        load=load,
        complete=False,
        holiday=date in dataset.holidays,
    )


def _score(result: DayResult, actual: np.ndarray) -> None:
    if np.isnan(actual).any():
        return
    result.y_true = np.array(actual)
    result.rmse = rmse(actual, result.y_pred)
    try:
        result.r2 = r2(actual, result.y_pred)
    except DegenerateActual:
        result.r2 = None


def fit_model(matrix, grid: GridSpec, config: RunConfig):
    """Grid search then a final fit on every row; returns (model, seconds, capped)."""
    t0 = time.perf_counter()
    best, results = grid_search(
        matrix, grid, k=config.folds, seed=config.seed, day_blocked=config.day_blocked,
        tol=config.tol, max_iter=config.max_iter,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateColumn)
        scaler = fit_scaler(matrix.X, matrix.y)
    model = train_svr(matrix.scale(scaler), best, tol=config.tol, max_iter=config.max_iter)
    seconds = time.perf_counter() - t0
    capped = any(r.capped for r in results if r.params == best) or not model.converged
    return model, seconds, capped


def predict_day(model, day: DayRecord, profiles: ProfileConfig, holidays) -> np.ndarray:
    rows = day_features(day, profiles, holidays)
    return predict(model, model.scaler.transform(rows.X))


def relevant_day(date: dt.date, dataset: Dataset, profiles: ProfileConfig, config: RunConfig, grid: GridSpec) -> DayResult:
    day_type = classify_day(date, dataset.holidays)
    result = DayResult(date, day_type.value)
    try:
        forecast = forecast_for(date, dataset, config)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ShortfallWarning)
            selection = select_for_date(date, dataset, forecast, k=config.k, band=config.band)
    except (MissingForecast, MissingHistory, EmptyPool) as exc:
        result.status = f"skipped: {exc}"
        log.warning("%s", result.status)
        return result
    chosen = [dataset.get(d) for d in selection.chosen]
    matrix = assemble_training_matrix(chosen, profiles, dataset.holidays)
    model, seconds, capped = fit_model(matrix, grid, config)
    target = _forecast_day(date, dataset, forecast)
    result.params = model.params
    result.selected = list(selection.ranked)
    result.y_pred = predict_day(model, target, profiles, dataset.holidays)
    result.train_seconds = seconds
    result.n_train_rows = len(matrix)
    result.capped = capped
    _score(result, target.load)
    return result


def _relevant_job(args):
    return relevant_day(*args)


def run_relevant(config: RunConfig, dataset: Dataset | None = None, profiles: ProfileConfig | None = None) -> PredictionReport:
    if dataset is None or profiles is None:
        dataset, profiles = load_inputs(config)
    grid = config.grid_spec()
    dates = test_dates(dataset, config)
    jobs = [(d, dataset, profiles, config, grid) for d in dates]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            days = list(pool.map(_relevant_job, jobs))
    else:
        days = [_relevant_job(j) for j in jobs]
    models = [
        ModelRecord(d.date.isoformat(), d.params, d.n_train_rows, d.train_seconds, d.capped, 0)
        for d in days
        if d.params is not None
    ]
    return PredictionReport("relevant", config.k, days, models)


def whole_training_days(dataset: Dataset, before: dt.date, coarse: CoarseClass) -> list[DayRecord]:
    return [d for d in dataset.training_pool() if d.date < before and d.day_type.coarse is coarse]


def run_whole(config: RunConfig, dataset: Dataset | None = None, profiles: ProfileConfig | None = None) -> PredictionReport:
    if dataset is None or profiles is None:
        dataset, profiles = load_inputs(config)
    grid = config.grid_spec()
    dates = test_dates(dataset, config)
    models = {}
    records = []
    for coarse in CoarseClass:
        pool = whole_training_days(dataset, dates[0], coarse)
        if not pool:
            log.warning("no %s training days before %s", coarse.value, dates[0])
            continue
        matrix = assemble_training_matrix(pool, profiles, dataset.holidays)
        log.info("whole mode: %s model on %d rows", coarse.value, len(matrix))
        model, seconds, capped = fit_model(matrix, grid, config)
        models[coarse] = (model, seconds, capped, len(matrix))
        records.append(ModelRecord(coarse.value, model.params, len(matrix), seconds, capped, model.n_support))

    days = []
    for date in dates:
        day_type = classify_day(date, dataset.holidays)
        result = DayResult(date, day_type.value)
        entry = models.get(day_type.coarse)
        if entry is None:
            result.status = f"skipped: no {day_type.coarse.value} model"
            days.append(result)
            continue
        try:
            forecast = forecast_for(date, dataset, config)
        except MissingForecast as exc:
            result.status = f"skipped: {exc}"
            days.append(result)
            continue
        model, _, capped, n_rows = entry
        target = _forecast_day(date, dataset, forecast)
        result.params = model.params
        result.y_pred = predict_day(model, target, profiles, dataset.holidays)
        result.n_train_rows = n_rows
        result.capped = capped
        _score(result, target.load)
        days.append(result)
    return PredictionReport("whole", None, days, records)


def run(config: RunConfig, dataset: Dataset | None = None, profiles: ProfileConfig | None = None) -> PredictionReport:
    fn = run_relevant if config.mode == "relevant" else run_whole
    return fn(config, dataset, profiles)


@dataclass
class SweepRow:
    k: int
    mean_r2: float | None
    mean_rmse: float | None
    r2: float | None
    rmse: float | None
    report: PredictionReport


def sweep_k(
    config: RunConfig,
    k_values: Sequence[int] = range(5, 21),
    dataset: Dataset | None = None,
    profiles: ProfileConfig | None = None,
) -> tuple[list[SweepRow], int]:
    """Relevant-mode runs over the validation period for each k; returns rows and the best k by mean R2."""
    if dataset is None or profiles is None:
        dataset, profiles = load_inputs(config)
    rows = []
    for k in k_values:
        cfg = RunConfig(**{**config.__dict__, "k": k, "mode": "relevant"})
        report = run_relevant(cfg, dataset, profiles)
        agg = report.aggregate()
        rows.append(SweepRow(k, agg["mean_r2"], agg["mean_rmse"], agg["r2"], agg["rmse"], report))
    scored = [r for r in rows if r.mean_r2 is not None]
    best = max(scored, key=lambda r: (r.mean_r2, -r.k)).k if scored else None
    return rows, best
