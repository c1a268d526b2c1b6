"""Relevant-day selection by DTW over outside-temperature windows.

A window starts at 18:00 of the governing previous day and runs to 23:45 of
the anchor day: 24 + 96 = 120 samples for Tuesday-Friday and weekend
anchors, and Friday 18:00 through Monday 23:45 (312 samples) for Mondays.
The query uses measured history plus the forecast for the prediction day;
candidates use measured temperatures only and share the prediction day's type.
"""

from __future__ import annotations

import datetime as dt
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import SLOTS_PER_DAY, Dataset, DayType, classify_day
from .dtw import rank_candidates
from .errors import EmptyPool, MissingForecast, MissingHistory

log = logging.getLogger(__name__)

WINDOW_START_SLOT = 18 * 4  # 18:00
TAIL = SLOTS_PER_DAY - WINDOW_START_SLOT


class ShortfallWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SearchWindow:
    anchor_date: dt.date
    start: dt.datetime
    temps: np.ndarray

    @property
    def length(self) -> int:
        return len(self.temps)


@dataclass(frozen=True)
class RelevantSelection:
    prediction_date: dt.date
    ranked: tuple[tuple[dt.date, float], ...]
    chosen: tuple[dt.date, ...]


def lookback_days(day_type: DayType) -> int:
    """Whole days between the window's starting day and the anchor day."""
    return 3 if day_type is DayType.WORKING_MONDAY else 1


def window_length(day_type: DayType) -> int:
    return TAIL + (lookback_days(day_type) - 1) * SLOTS_PER_DAY + SLOTS_PER_DAY


def _history(anchor: dt.date, day_type: DayType, dataset: Dataset) -> tuple[dt.datetime, list[np.ndarray]]:
    back = lookback_days(day_type)
    first = anchor - dt.timedelta(days=back)
    parts = []
    for offset in range(back, 0, -1):
        date = anchor - dt.timedelta(days=offset)
        day = dataset.get(date)
        if day is None:
            raise MissingHistory(f"{anchor}: no measured temperatures for {date}")
        parts.append(day.t_out[WINDOW_START_SLOT:] if date == first else day.t_out)
    start = dt.datetime.combine(first, dt.time(18, 0))
    return start, parts


def build_query_window(
    prediction_date: dt.date,
    dataset: Dataset,
    forecast_temps: Sequence[float] | None,
    day_type: DayType | None = None,
) -> SearchWindow:
    if day_type is None:
        day_type = classify_day(prediction_date, dataset.holidays)
    if forecast_temps is None:
        raise MissingForecast(f"{prediction_date}: no temperature forecast")
    forecast = np.asarray(forecast_temps, dtype=float)
    if forecast.shape != (SLOTS_PER_DAY,) or np.isnan(forecast).any():
        raise MissingForecast(f"{prediction_date}: forecast must hold {SLOTS_PER_DAY} temperatures")
    start, parts = _history(prediction_date, day_type, dataset)
    return SearchWindow(prediction_date, start, np.concatenate(parts + [forecast]))


def candidate_window(date: dt.date, day_type: DayType, dataset: Dataset) -> SearchWindow:
    day = dataset.get(date)
    if day is None:
        raise MissingHistory(f"{date}: not in dataset")
    start, parts = _history(date, day_type, dataset)
    return SearchWindow(date, start, np.concatenate(parts + [day.t_out]))


def candidate_windows(prediction_date: dt.date, day_type: DayType, dataset: Dataset) -> list[SearchWindow]:
    """One window per earlier complete day of the same type with full history."""
    windows = []
    for day in dataset.days:
        if day.date >= prediction_date:
            break
        if day.day_type is not day_type or not day.complete:
            continue
        try:
            windows.append(candidate_window(day.date, day_type, dataset))
        except MissingHistory:
            log.debug("%s: window incomplete, not a candidate", day.date)
    if not windows:
        raise EmptyPool(f"{prediction_date}: no earlier {day_type.value} days to choose from")
    return windows


def select_relevant_days(
    query: SearchWindow,
    candidates: Sequence[SearchWindow],
    k: int = 12,
    band: int | None = None,
) -> RelevantSelection:
    """Keep the ``k`` DTW-nearest candidates (fewer, with a warning, if the pool is short)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not candidates:
        raise EmptyPool(f"{query.anchor_date}: no candidates")
    if len(candidates) < k:
        warnings.warn(
            f"{query.anchor_date}: only {len(candidates)} candidate days for k={k}",
            ShortfallWarning,
            stacklevel=2,
        )
    ranked = rank_candidates(
        query.temps,
        [(w.anchor_date, w.temps) for w in candidates],
        band=band,
        k=min(k, len(candidates)),
    )
    return RelevantSelection(query.anchor_date, tuple(ranked), tuple(d for d, _ in ranked))


def select_for_date(
    prediction_date: dt.date,
    dataset: Dataset,
    forecast_temps: Sequence[float] | None,
    k: int = 12,
    band: int | None = None,
) -> RelevantSelection:
    day_type = classify_day(prediction_date, dataset.holidays)
    query = build_query_window(prediction_date, dataset, forecast_temps, day_type)
    return select_relevant_days(query, candidate_windows(prediction_date, day_type, dataset), k, band)
