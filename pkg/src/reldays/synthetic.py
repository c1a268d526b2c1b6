"""Desk-scale synthetic heating corpus.

Weather is a seasonal cosine plus a per-day diurnal swing plus a synoptic
AR(1) anomaly (interpolated within the day) and small 15-minute noise,
clipped to the scenario bounds. The building is a single-node lumped model

    C_th dT_in/dt = H (T_out - T_in) + P + gains,   tau = C_th / H

with a proportional heater ``P = clip(Kp (T_sp - T_in), 0, P_max)`` chasing a
set-point that moves between set-back and comfort with the day type's
schedule level ``g``. The reported load is ``P`` plus measurement noise.
Because ``T_in`` carries the previous evening's history into the morning
boost, days with similar temperature windows have similar loads.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import (
    HEADER,
    SLOT_MINUTES,
    SLOTS_PER_DAY,
    TIMESTAMP_FORMAT,
    DayType,
    classify_day,
)
from .errors import InvalidScenario
from .features import ProfileConfig

DT_HOURS = SLOT_MINUTES / 60.0


def _schedule(segments: list[tuple[float, float, float]]) -> np.ndarray:
    """Profile from (start hour, end hour, level) segments, zero elsewhere."""
    g = np.zeros(SLOTS_PER_DAY)
    for start, end, level in segments:
        g[int(start * 4) : int(end * 4)] = level
    return g


def default_profiles() -> ProfileConfig:
    return ProfileConfig(
        {
            DayType.WORKING_MONDAY: _schedule([(4, 5, 0.5), (5, 19, 1.0), (19, 20, 0.5)]),
            DayType.WORKING_OTHER: _schedule([(5.5, 6.5, 0.5), (6.5, 19, 1.0), (19, 20, 0.5)]),
            DayType.SATURDAY: _schedule([(7.5, 8, 0.25), (8, 14, 0.6), (14, 15, 0.25)]),
            DayType.SUNDAY: _schedule([(9, 10, 0.25), (10, 16, 0.4), (16, 17, 0.25)]),
        }
    )


@dataclass(frozen=True)
class Scenario:
    start: dt.date = dt.date(2012, 9, 3)
    # weather
    t_mean: float = 12.5
    t_seasonal_amp: float = 7.0
    coldest_day_of_year: int = 20
    diurnal_amp_range: tuple[float, float] = (1.5, 6.0)
    synoptic_sd: float = 3.0
    synoptic_phi: float = 0.75
    noise_sd: float = 0.15
    t_bounds: tuple[float, float] = (-3.0, 24.0)
    # building
    tau_hours: float = 30.0
    ua_kw_per_k: float = 30.0
    kp_kw_per_k: float = 150.0
    p_max_kw: float = 1200.0
    gains_kw: float = 90.0
    t_setback: float = 12.0
    t_comfort: float = 21.0
    t_in_initial: float = 18.0
    load_noise_sd: float = 6.0

    def validate(self) -> None:
        lo, hi = self.t_bounds
        if not lo < hi:
            raise InvalidScenario("temperature bounds must satisfy lo < hi")
        if self.tau_hours <= DT_HOURS:
            raise InvalidScenario("time constant must exceed one sampling step")
        for name in ("ua_kw_per_k", "kp_kw_per_k", "p_max_kw"):
            if getattr(self, name) <= 0:
                raise InvalidScenario(f"{name} must be positive")
        a, b = self.diurnal_amp_range
        if not 0 <= a <= b:
            raise InvalidScenario("diurnal amplitude range must satisfy 0 <= lo <= hi")
        if not 0 <= self.synoptic_phi < 1:
            raise InvalidScenario("synoptic_phi must lie in [0, 1)")
        if min(self.noise_sd, self.synoptic_sd, self.load_noise_sd, self.gains_kw) < 0:
            raise InvalidScenario("noise levels and gains must be non-negative")
        if self.t_setback > self.t_comfort:
            raise InvalidScenario("set-back above comfort set-point")


@dataclass(frozen=True, eq=False)
class SyntheticCorpus:
    timestamps: list[dt.datetime]
    t_out: np.ndarray
    load: np.ndarray
    t_in: np.ndarray
    level: np.ndarray
    profiles: ProfileConfig
    scenario: Scenario

    @property
    def dates(self) -> list[dt.date]:
        return [self.timestamps[i].date() for i in range(0, len(self.timestamps), SLOTS_PER_DAY)]


def _weather(days: int, rng: np.random.Generator, sc: Scenario) -> np.ndarray:
    n = days * SLOTS_PER_DAY
    hours = np.arange(n) * DT_HOURS
    day_idx = np.arange(days)
    doy = np.array([(sc.start + dt.timedelta(days=int(d))).timetuple().tm_yday for d in day_idx])
    seasonal_daily = sc.t_mean - sc.t_seasonal_amp * np.cos(2 * np.pi * (doy - sc.coldest_day_of_year) / 365.25)

    anomaly = np.empty(days + 1)
    anomaly[0] = rng.normal(0.0, sc.synoptic_sd)
    innov_sd = sc.synoptic_sd * np.sqrt(1 - sc.synoptic_phi**2)
    for d in range(1, days + 1):
        anomaly[d] = sc.synoptic_phi * anomaly[d - 1] + rng.normal(0.0, innov_sd)
    amp = rng.uniform(*sc.diurnal_amp_range, size=days + 1)

    # daily values anchored at midnight, linearly interpolated through the day
    anchors = np.arange(days + 1) * 24.0
    base = np.interp(hours, anchors, np.append(seasonal_daily, seasonal_daily[-1]) + anomaly)
    amp_t = np.interp(hours, anchors, amp)
    diurnal = amp_t * np.cos(2 * np.pi * (hours % 24 - 15.0) / 24.0)
    noise = np.empty(n)
    noise[0] = 0.0
    for t in range(1, n):
        noise[t] = 0.9 * noise[t - 1] + rng.normal(0.0, sc.noise_sd)
    return np.clip(base + diurnal + noise, *sc.t_bounds)


def generate_synthetic(
    days: int,
    seed: int = 0,
    scenario: Scenario | None = None,
    profiles: ProfileConfig | None = None,
) -> SyntheticCorpus:
    if days < 30:
        raise InvalidScenario(f"need at least 30 days, got {days}")
    sc = scenario or Scenario()
    sc.validate()
    profiles = profiles or default_profiles()
    rng = np.random.default_rng(seed)
    t_out = _weather(days, rng, sc)

    level = np.concatenate(
        [profiles.profile(classify_day(sc.start + dt.timedelta(days=d))) for d in range(days)]
    )
    setpoint = sc.t_setback + level * (sc.t_comfort - sc.t_setback)
    cap = sc.ua_kw_per_k * sc.tau_hours  # kWh/K
    n = len(t_out)
    t_in = np.empty(n)
    power = np.empty(n)
    temp = sc.t_in_initial
    for t in range(n):
        p = min(max(sc.kp_kw_per_k * (setpoint[t] - temp), 0.0), sc.p_max_kw)
        power[t] = p
        t_in[t] = temp
        temp += DT_HOURS / cap * (sc.ua_kw_per_k * (t_out[t] - temp) + p + sc.gains_kw * level[t])
    load = np.maximum(power + rng.normal(0.0, sc.load_noise_sd, size=n), 0.0)

    origin = dt.datetime.combine(sc.start, dt.time())
    stamps = [origin + dt.timedelta(minutes=SLOT_MINUTES * i) for i in range(n)]
    return SyntheticCorpus(stamps, np.round(t_out, 2), np.round(load, 1), t_in, level, profiles, sc)


def write_corpus(corpus: SyntheticCorpus, out_dir: str | Path, forecast_noise_sd: float = 0.0, seed: int = 0) -> dict:
    """Write ``data.csv``, ``profiles.json``, ``scenario.json`` and one forecast file per day.

    Forecasts are the measured temperatures, optionally perturbed with
    Gaussian noise of ``forecast_noise_sd``.
    """
    out = Path(out_dir)
    fc_dir = out / "forecasts"
    fc_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(HEADER)]
    for ts, t, y in zip(corpus.timestamps, corpus.t_out, corpus.load):
        lines.append(f"{ts.strftime(TIMESTAMP_FORMAT)},{t:.2f},{y:.1f}")
    data_path = out / "data.csv"
    data_path.write_text("\n".join(lines) + "\n")
    profile_path = out / "profiles.json"
    corpus.profiles.save(profile_path)
    scenario = asdict(corpus.scenario)
    scenario["start"] = corpus.scenario.start.isoformat()
    (out / "scenario.json").write_text(json.dumps(scenario, indent=1) + "\n")

    rng = np.random.default_rng(seed)
    for k, date in enumerate(corpus.dates):
        sl = slice(k * SLOTS_PER_DAY, (k + 1) * SLOTS_PER_DAY)
        temps = corpus.t_out[sl]
        if forecast_noise_sd > 0:
            temps = temps + rng.normal(0.0, forecast_noise_sd, size=SLOTS_PER_DAY)
        rows = ["timestamp,t_out_c"] + [
            f"{ts.strftime(TIMESTAMP_FORMAT)},{t:.2f}" for ts, t in zip(corpus.timestamps[sl], temps)
        ]
        (fc_dir / f"{date.isoformat()}.csv").write_text("\n".join(rows) + "\n")
    return {"data": data_path, "profiles": profile_path, "forecasts": fc_dir}
