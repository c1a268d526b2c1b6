"""Ingestion, cleaning and day segmentation of 15-minute building series.

Input CSV header is exactly ``timestamp,t_out_c,load_kw`` with timestamps
``YYYY-MM-DDTHH:MM`` in naive local time; an empty field means missing.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptyFile, MissingColumn, UnparsableTimestamp

log = logging.getLogger(__name__)

SLOTS_PER_DAY = 96
SLOT_MINUTES = 15
HEADER = ("timestamp", "t_out_c", "load_kw")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"

LOAD_GAP_LIMIT = 2
TEMP_GAP_LIMIT = 4


class DayType(enum.Enum):
    WORKING_MONDAY = "WorkingMonday"
    WORKING_OTHER = "WorkingOther"
    SATURDAY = "Saturday"
    SUNDAY = "Sunday"

    @property
    def coarse(self) -> "CoarseClass":
        if self in (DayType.WORKING_MONDAY, DayType.WORKING_OTHER):
            return CoarseClass.WORKING
        return CoarseClass.WEEKEND


class CoarseClass(enum.Enum):
    WORKING = "Working"
    WEEKEND = "Weekend"


@dataclass(frozen=True)
class Bounds:
    """Plausibility limits; values outside are treated as missing."""

    t_min: float = -30.0
    t_max: float = 50.0
    load_max: float = 10_000.0

    def temp_ok(self, value: float) -> bool:
        return self.t_min <= value <= self.t_max

    def load_ok(self, value: float) -> bool:
        return 0.0 <= value <= self.load_max


class Sample(NamedTuple):
    timestamp: dt.datetime
    t_out: float  # NaN when missing
    load: float  # NaN when missing or not yet measured


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DayRecord:
    date: dt.date
    day_type: DayType
    t_out: np.ndarray
    load: np.ndarray
    complete: bool
    holiday: bool = False

    def __post_init__(self):
        t_out = _frozen(self.t_out)
        load = _frozen(self.load)
        if t_out.shape != (SLOTS_PER_DAY,) or load.shape != (SLOTS_PER_DAY,):
            raise ValueError(f"{self.date}: a day holds exactly {SLOTS_PER_DAY} samples")
        object.__setattr__(self, "t_out", t_out)
        object.__setattr__(self, "load", load)

    @property
    def timestamps(self) -> list[dt.datetime]:
        start = dt.datetime.combine(self.date, dt.time())
        return [start + dt.timedelta(minutes=SLOT_MINUTES * i) for i in range(SLOTS_PER_DAY)]

    @property
    def samples(self) -> list[Sample]:
        return [Sample(ts, t, y) for ts, t, y in zip(self.timestamps, self.t_out, self.load)]

    def __eq__(self, other):
        if not isinstance(other, DayRecord):
            return NotImplemented
        return (
            self.date == other.date
            and self.day_type == other.day_type
            and self.complete == other.complete
            and self.holiday == other.holiday
            and np.array_equal(self.t_out, other.t_out, equal_nan=True)
            and np.array_equal(self.load, other.load, equal_nan=True)
        )

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    days: tuple[DayRecord, ...]
    source: str = ""
    ingested_at: str = ""
    holidays: frozenset[dt.date] = field(default_factory=frozenset)

    def __post_init__(self):
        days = tuple(self.days)
        for a, b in zip(days, days[1:]):
            if not a.date < b.date:
                raise ValueError(f"dates must be strictly increasing: {a.date} then {b.date}")
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "_index", {d.date: d for d in days})

    def __len__(self):
        return len(self.days)

    def __iter__(self):
        return iter(self.days)

    def get(self, date: dt.date) -> DayRecord | None:
        return self._index.get(date)

    def __contains__(self, date) -> bool:
        return date in self._index

    def training_pool(self) -> list[DayRecord]:
        return [d for d in self.days if d.complete]

    def span(self) -> tuple[dt.date, dt.date]:
        return self.days[0].date, self.days[-1].date


def classify_day(date: dt.date, holidays: Iterable[dt.date] = ()) -> DayType:
    """Functioning-profile class of a calendar day; holidays behave like Saturdays."""
    if date in holidays:
        return DayType.SATURDAY
    weekday = date.weekday()
    if weekday == 0:
        return DayType.WORKING_MONDAY
    if weekday < 5:
        return DayType.WORKING_OTHER
    if weekday == 5:
        return DayType.SATURDAY
    return DayType.SUNDAY


def read_holidays(path: str | Path) -> frozenset[dt.date]:
    out = set()
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            out.add(dt.date.fromisoformat(line))
        except ValueError as exc:
            raise UnparsableTimestamp(f"{path}:{lineno}: not an ISO date: {line!r}") from exc
    return frozenset(out)


def parse_timestamp(text: str) -> dt.datetime:
    ts = dt.datetime.strptime(text.strip(), TIMESTAMP_FORMAT)
    if ts.minute % SLOT_MINUTES:
        raise ValueError(f"minute {ts.minute:02d} is not on the 15-minute grid")
    return ts


def _parse_value(text: str) -> float:
    text = text.strip()
    if not text:
        return math.nan
    value = float(text)
    return value if math.isfinite(value) else math.nan


def read_samples(path: str | Path) -> list[Sample]:
    """Parse the CSV into samples. Bad numbers become missing; bad timestamps abort."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        header = [h.strip() for h in header]
        for col in HEADER:
            if col not in header:
                raise MissingColumn(f"{path}:1: missing column {col!r} (header {header})")
        if tuple(header) != HEADER:
            raise MissingColumn(f"{path}:1: header must be exactly {','.join(HEADER)}, got {','.join(header)}")
        samples = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise UnparsableTimestamp(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[0])
            except ValueError as exc:
                raise UnparsableTimestamp(f"{path}:{lineno}: {row[0]!r}: {exc}") from exc
            values = []
            for name, cell in zip(HEADER[1:], row[1:]):
                try:
                    values.append(_parse_value(cell))
                except ValueError:
                    log.warning("%s:%d: unparsable %s %r treated as missing", path, lineno, name, cell)
                    values.append(math.nan)
            samples.append(Sample(ts, values[0], values[1]))
    if not samples:
        raise EmptyFile(f"{path}: no data rows")
    return samples


def ingest_csv(
    path: str | Path,
    bounds: Bounds = Bounds(),
    holidays: Iterable[dt.date] = (),
) -> Dataset:
    samples = read_samples(path)
    data = clean_and_segment(samples, bounds, holidays)
    return Dataset(
        data.days,
        source=str(path),
        ingested_at=dt.datetime.now().isoformat(timespec="seconds"),
        holidays=data.holidays,
    )


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open (start, stop) runs where mask is True."""
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def fill_short_gaps(values: np.ndarray, limit: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Linearly interpolate interior NaN runs of length <= limit.

    Returns the filled copy and the runs left unfilled.
    """
    out = np.array(values, dtype=float)
    left = []
    for start, stop in _runs(np.isnan(out)):
        if stop - start <= limit and start > 0 and stop < len(out):
            lo, hi = out[start - 1], out[stop]
            steps = stop - start + 1
            out[start:stop] = lo + (hi - lo) * np.arange(1, steps) / steps
        else:
            left.append((start, stop))
    return out, left


def clean_and_segment(
    samples: Sequence[Sample],
    bounds: Bounds = Bounds(),
    holidays: Iterable[dt.date] = (),
) -> Dataset:
    """Apply bounds, interpolate short gaps and cut the timeline into day records.

    Load gaps up to two samples and temperature gaps up to four are linearly
    interpolated along the continuous timeline. A day keeps ``complete=False``
    when load gaps remain; days with remaining temperature gaps, duplicated
    timestamps (e.g. daylight-saving fall-back) are dropped.
    """
    holidays = frozenset(holidays)
    if not samples:
        return Dataset((), holidays=holidays)
    ordered = sorted(samples, key=lambda s: s.timestamp)
    first = ordered[0].timestamp.date()
    last = ordered[-1].timestamp.date()
    n_days = (last - first).days + 1
    n = n_days * SLOTS_PER_DAY
    t_out = np.full(n, np.nan)
    load = np.full(n, np.nan)
    seen = np.zeros(n, dtype=bool)
    ambiguous = set()
    origin = dt.datetime.combine(first, dt.time())
    for s in ordered:
        idx = int((s.timestamp - origin).total_seconds() // (SLOT_MINUTES * 60))
        if seen[idx]:
            ambiguous.add(s.timestamp.date())
            continue
        seen[idx] = True
        if not math.isnan(s.t_out):
            if bounds.temp_ok(s.t_out):
                t_out[idx] = s.t_out
            else:
                log.warning("%s: temperature %.3f out of bounds, treated as missing", s.timestamp, s.t_out)
        if not math.isnan(s.load):
            if bounds.load_ok(s.load):
                load[idx] = s.load
            else:
                log.warning("%s: load %.3f out of bounds, treated as missing", s.timestamp, s.load)

    t_out, _ = fill_short_gaps(t_out, TEMP_GAP_LIMIT)
    load, _ = fill_short_gaps(load, LOAD_GAP_LIMIT)

    days = []
    for k in range(n_days):
        date = first + dt.timedelta(days=k)
        sl = slice(k * SLOTS_PER_DAY, (k + 1) * SLOTS_PER_DAY)
        if not seen[sl].any():
            continue
        if date in ambiguous:
            log.warning("%s: duplicated timestamps, day dropped", date)
            continue
        temps = t_out[sl]
        if np.isnan(temps).any():
            log.warning("%s: temperature gap longer than %d samples, day dropped", date, TEMP_GAP_LIMIT)
            continue
        loads = load[sl]
        missing = int(np.isnan(loads).sum())
        complete = missing == 0
        if not complete and missing < SLOTS_PER_DAY:
            log.warning("%s: %d load samples unrecoverable, excluded from training pool", date, missing)
        days.append(
            DayRecord(
                date=date,
                day_type=classify_day(date, holidays),
                t_out=temps,
                load=loads,
                complete=complete,
                holiday=date in holidays,
            )
        )
    return Dataset(tuple(days), holidays=holidays)


def _fmt(value: float) -> str:
    return "" if math.isnan(value) else repr(float(value))


def write_csv(dataset: Dataset | Iterable[DayRecord], path: str | Path) -> None:
    days = dataset.days if isinstance(dataset, Dataset) else list(dataset)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for day in days:
            for ts, t, y in zip(day.timestamps, day.t_out, day.load):
                writer.writerow([ts.strftime(TIMESTAMP_FORMAT), _fmt(t), _fmt(y)])


class DegenerateColumn(UserWarning):
    """A constant column was centred only (its std is stored as 1)."""


@dataclass(frozen=True, eq=False)
class Scaler:
    """Per-column standardisation with population std, plus the target's."""

    mean: np.ndarray
    std: np.ndarray
    target_mean: float = 0.0
    target_std: float = 1.0

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def transform_target(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_std

    def inverse_target(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.target_std + self.target_mean

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "target_mean": float(self.target_mean),
            "target_std": float(self.target_std),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.array(d["mean"], float), np.array(d["std"], float), d["target_mean"], d["target_std"])

    def __eq__(self, other):
        if not isinstance(other, Scaler):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
            and self.target_mean == other.target_mean
            and self.target_std == other.target_std
        )

    __hash__ = None


def _mean_std(values: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0)
    std = values.std(axis=0)
    scale = np.maximum(1.0, np.abs(mean))
    flat = std <= 1e-12 * scale
    if np.any(flat):
        warnings.warn(
            f"{name}: constant column(s) {np.flatnonzero(np.atleast_1d(flat)).tolist()} centred only",
            DegenerateColumn,
            stacklevel=3,
        )
        std = np.where(flat, 1.0, std)
    return mean, std


def fit_scaler(X, y: np.ndarray | None = None) -> Scaler:
    """Fit on training rows only. ``X`` may be an array or a feature matrix with targets."""
    if hasattr(X, "X"):
        X, y = X.X, X.y if y is None else y
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on an empty matrix")
    mean, std = _mean_std(X, "features")
    if y is None:
        return Scaler(mean, std)
    y_mean, y_std = _mean_std(np.asarray(y, dtype=float)[:, None], "target")
    return Scaler(mean, std, float(y_mean[0]), float(y_std[0]))
