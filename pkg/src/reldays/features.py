"""Pseudo-dynamic feature rows.

Each 15-minute slot ``l`` (1-based) of a day becomes

    [sin(2 pi l/L), cos(2 pi l/L), t_out(l), g(l), tau(l), g(l-1), g(l-2), g(l-3), g(l-4)]

where ``g`` is the scheduled operation level of the day's type (a value in
[0, 1] taken from the profile config), ``tau(l) = g(l) - g(l-1)`` marks
schedule transitions and the four lags cover one hour of thermal inertia.
Lags that cross midnight read the tail of the previous day's profile. None
of the features uses measured load, so they are all available at
prediction time.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import SLOTS_PER_DAY, DayRecord, DayType, Scaler, classify_day
from .errors import (
    EmptySelection,
    IncompleteDay,
    MissingTemperature,
    ProfileError,
    SlotOutOfRange,
)

N_FEATURES = 9
N_LAGS = 4
FEATURE_NAMES = ("sin_t", "cos_t", "t_out", "g", "tau", "lag1", "lag2", "lag3", "lag4")
HOLIDAY_KEY = "holidays_profile"


@dataclass(frozen=True, eq=False)
class ProfileConfig:
    profiles: Mapping[DayType, np.ndarray]
    holiday: np.ndarray | None = None

    def __post_init__(self):
        fixed = {}
        for day_type in DayType:
            if day_type not in self.profiles:
                raise ProfileError(f"no profile for {day_type.value}")
            fixed[day_type] = _validated(self.profiles[day_type], day_type.value)
        object.__setattr__(self, "profiles", fixed)
        if self.holiday is not None:
            object.__setattr__(self, "holiday", _validated(self.holiday, HOLIDAY_KEY))

    def profile(self, day_type: DayType, holiday: bool = False) -> np.ndarray:
        if holiday:
            return self.holiday if self.holiday is not None else self.profiles[DayType.SATURDAY]
        return self.profiles[day_type]

    def to_dict(self) -> dict:
        out = {t.value: [float(v) for v in p] for t, p in self.profiles.items()}
        if self.holiday is not None:
            out[HOLIDAY_KEY] = [float(v) for v in self.holiday]
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def flat(cls, level: float = 0.0) -> "ProfileConfig":
        return cls({t: np.full(SLOTS_PER_DAY, level) for t in DayType})


def _validated(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (SLOTS_PER_DAY,):
        raise ProfileError(f"{name}: expected {SLOTS_PER_DAY} values, got {arr.size}")
    if np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0:
        raise ProfileError(f"{name}: profile values must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def load_profiles(path: str | Path) -> ProfileConfig:
    """Read the JSON profile config, reporting the offending line on error."""
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ProfileError(f"{path}:1: top level must be an object")
    known = {t.value for t in DayType} | {HOLIDAY_KEY}
    for key in raw:
        if key not in known:
            raise ProfileError(f"{path}:{_key_line(text, key)}: unknown key {key!r}")
    profiles = {}
    for day_type in DayType:
        if day_type.value not in raw:
            raise ProfileError(f"{path}:1: missing profile {day_type.value!r}")
        try:
            profiles[day_type] = _validated(raw[day_type.value], day_type.value)
        except (ProfileError, TypeError, ValueError) as exc:
            raise ProfileError(f"{path}:{_key_line(text, day_type.value)}: {exc}") from exc
    holiday = None
    if HOLIDAY_KEY in raw:
        try:
            holiday = _validated(raw[HOLIDAY_KEY], HOLIDAY_KEY)
        except (ProfileError, TypeError, ValueError) as exc:
            raise ProfileError(f"{path}:{_key_line(text, HOLIDAY_KEY)}: {exc}") from exc
    return ProfileConfig(profiles, holiday)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Feature rows with aligned targets and (date, slot) provenance.

    ``scaler`` is set once ``X`` (and ``y``) are standardised.
    """

    X: np.ndarray
    y: np.ndarray | None
    dates: tuple[dt.date, ...]
    slots: np.ndarray
    scaler: Scaler | None = None

    def __post_init__(self):
        n = len(self.X)
        if self.y is not None and len(self.y) != n:
            raise ValueError("rows and targets differ in length")
        if len(self.dates) != n or len(self.slots) != n:
            raise ValueError("provenance must cover every row")

    def __len__(self):
        return len(self.X)

    @property
    def scaled(self) -> bool:
        return self.scaler is not None

    @property
    def n_days(self) -> int:
        return len(set(self.dates))

    def take(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return FeatureMatrix(
            self.X[idx],
            None if self.y is None else self.y[idx],
            tuple(self.dates[i] for i in idx),
            self.slots[idx],
            self.scaler,
        )

    def scale(self, scaler: Scaler) -> "FeatureMatrix":
        if self.scaled:
            raise ValueError("matrix is already scaled")
        y = None if self.y is None else scaler.transform_target(self.y)
        return replace(self, X=scaler.transform(self.X), y=y, scaler=scaler)


def temporal_indicators(l: int, L: int = SLOTS_PER_DAY) -> tuple[float, float]:
    if not 1 <= l <= L:
        raise SlotOutOfRange(f"slot {l} outside 1..{L}")
    angle = 2.0 * math.pi * l / L
    return math.sin(angle), math.cos(angle)


def _extended(profile: np.ndarray, prev_profile: np.ndarray | None) -> np.ndarray:
    """Previous day's last four slots followed by today's profile."""
    prev = profile if prev_profile is None else prev_profile
    return np.concatenate([prev[-N_LAGS:], profile])


def transition_indicator(profile: Sequence[float], l: int, prev_profile: Sequence[float] | None = None) -> float:
    """``g(l) - g(l-1)``; at ``l = 1`` the previous value is the prior day's last slot."""
    profile = np.asarray(profile, dtype=float)
    if not 1 <= l <= len(profile):
        raise SlotOutOfRange(f"slot {l} outside 1..{len(profile)}")
    prev = profile if prev_profile is None else np.asarray(prev_profile, dtype=float)
    before = prev[-1] if l == 1 else profile[l - 2]
    return float(profile[l - 1] - before)


def profile_block(profile: np.ndarray, prev_profile: np.ndarray | None) -> np.ndarray:
    """(96, 6) block of g, tau and the four lags."""
    ext = _extended(profile, prev_profile)
    n = len(profile)
    g = ext[N_LAGS:]
    lags = np.stack([ext[N_LAGS - k : N_LAGS - k + n] for k in range(1, N_LAGS + 1)], axis=1)
    tau = g - lags[:, 0]
    return np.column_stack([g, tau, lags])


_SLOTS = np.arange(1, SLOTS_PER_DAY + 1)
_ANGLES = 2.0 * np.pi * _SLOTS / SLOTS_PER_DAY
_SIN = np.sin(_ANGLES)
_COS = np.cos(_ANGLES)


def build_day_features(
    day: DayRecord,
    profiles: ProfileConfig,
    prev_day_type: DayType | None = None,
    prev_holiday: bool = False,
) -> FeatureMatrix:
    """96 feature rows for one day; targets are the day's loads (NaN if unmeasured)."""
    if np.isnan(day.t_out).any():
        raise MissingTemperature(f"{day.date}: temperature series has gaps")
    if prev_day_type is None:
        prev_day_type = classify_day(day.date - dt.timedelta(days=1))
    profile = profiles.profile(day.day_type, day.holiday)
    prev_profile = profiles.profile(prev_day_type, prev_holiday)
    X = np.column_stack([_SIN, _COS, day.t_out, profile_block(profile, prev_profile)])
    return FeatureMatrix(X, np.array(day.load), (day.date,) * SLOTS_PER_DAY, _SLOTS.copy())


def _previous(date: dt.date, holidays: Iterable[dt.date]) -> tuple[DayType, bool]:
    prev = date - dt.timedelta(days=1)
    return classify_day(prev, holidays), prev in holidays


def day_features(day: DayRecord, profiles: ProfileConfig, holidays: Iterable[dt.date] = ()) -> FeatureMatrix:
    prev_type, prev_holiday = _previous(day.date, holidays)
    return build_day_features(day, profiles, prev_type, prev_holiday)


def stack(parts: Sequence[FeatureMatrix]) -> FeatureMatrix:
    return FeatureMatrix(
        np.vstack([p.X for p in parts]),
        None if any(p.y is None for p in parts) else np.concatenate([p.y for p in parts]),
        tuple(d for p in parts for d in p.dates),
        np.concatenate([p.slots for p in parts]),
    )


def assemble_training_matrix(
    days: Sequence[DayRecord],
    profiles: ProfileConfig,
    holidays: Iterable[dt.date] = (),
) -> FeatureMatrix:
    """Unscaled 96*len(days) rows in the given day order."""
    if not days:
        raise EmptySelection("no training days selected")
    holidays = frozenset(holidays)
    for day in days:
        if not day.complete or np.isnan(day.load).any():
            raise IncompleteDay(f"{day.date}: load series incomplete")
    return stack([day_features(day, profiles, holidays) for day in days])
