import datetime as dt
import warnings

import numpy as np
import pytest

from reldays.dataset import Dataset, DayRecord, DayType, classify_day
from reldays.errors import EmptyPool, MissingForecast, MissingHistory
from reldays.selector import (
    ShortfallWarning,
    build_query_window,
    candidate_windows,
    select_for_date,
    select_relevant_days,
    window_length,
)

START = dt.date(2014, 1, 6)  # a Monday


def make_dataset(n_days=70, seed=0, drop=(), incomplete=()):
    rng = np.random.default_rng(seed)
    days = []
    for k in range(n_days):
        date = START + dt.timedelta(days=k)
        if date in drop:
            continue
        temps = np.round(rng.normal(5, 3) + 3 * np.sin(np.arange(96) / 15) + rng.normal(0, 0.5, 96), 2)
        days.append(DayRecord(date, classify_day(date), temps, rng.uniform(50, 100, 96), date not in incomplete))
    return Dataset(tuple(days))


def test_window_lengths():
    assert window_length(DayType.WORKING_OTHER) == 120
    assert window_length(DayType.SATURDAY) == 120
    assert window_length(DayType.SUNDAY) == 120
    assert window_length(DayType.WORKING_MONDAY) == 312


@pytest.mark.parametrize("offset,length,start_day", [(1, 120, 0), (0, 312, -3), (5, 120, 4), (6, 120, 5)])
def test_query_window(offset, length, start_day):
    ds = make_dataset()
    date = START + dt.timedelta(days=28 + offset)
    w = build_query_window(date, ds, np.zeros(96))
    assert w.length == length
    assert w.start == dt.datetime.combine(START + dt.timedelta(days=28 + start_day), dt.time(18, 0))
    prev = ds.get(date - dt.timedelta(days=1))
    assert np.array_equal(w.temps[-96 - 24 : -96], prev.t_out[72:])
    assert np.all(w.temps[-96:] == 0)


def test_query_errors():
    ds = make_dataset(10)
    with pytest.raises(MissingHistory):
        build_query_window(START, ds, np.zeros(96))
    with pytest.raises(MissingForecast):
        build_query_window(START + dt.timedelta(days=3), ds, None)
    with pytest.raises(MissingForecast):
        build_query_window(START + dt.timedelta(days=3), ds, np.zeros(95))


def test_candidates_same_type_and_earlier():
    ds = make_dataset()
    date = START + dt.timedelta(days=50)  # a Tuesday, after seven full weeks
    cands = candidate_windows(date, DayType.WORKING_OTHER, ds)
    assert all(c.anchor_date < date and classify_day(c.anchor_date) is DayType.WORKING_OTHER for c in cands)
    assert len(cands) == 7 * 4
    mondays = candidate_windows(START + dt.timedelta(days=49), DayType.WORKING_MONDAY, ds)
    assert [c.length for c in mondays] == [312] * 6


def test_candidate_with_missing_previous_day_excluded():
    gap = START + dt.timedelta(days=15)  # Tuesday
    ds = make_dataset(drop={gap})
    dates = {c.anchor_date for c in candidate_windows(START + dt.timedelta(days=40), DayType.WORKING_OTHER, ds)}
    assert gap + dt.timedelta(days=1) not in dates and gap not in dates


def test_incomplete_days_not_candidates():
    bad = START + dt.timedelta(days=9)
    ds = make_dataset(incomplete={bad})
    dates = {c.anchor_date for c in candidate_windows(START + dt.timedelta(days=40), DayType.WORKING_OTHER, ds)}
    assert bad not in dates


def test_empty_pool():
    ds = make_dataset(10)
    with pytest.raises(EmptyPool):
        candidate_windows(START + dt.timedelta(days=7), DayType.WORKING_MONDAY, ds)


def test_select_k_and_order():
    ds = make_dataset()
    date = START + dt.timedelta(days=60)
    sel = select_for_date(date, ds, ds.get(date).t_out, k=12)
    assert len(sel.chosen) == 12 == len(set(sel.chosen))
    dists = [d for _, d in sel.ranked]
    assert dists == sorted(dists)
    assert all(d < date and classify_day(d) is classify_day(date) for d in sel.chosen)


def test_shortfall_warning():
    ds = make_dataset(60)
    date = START + dt.timedelta(days=56)  # Monday with 8 earlier Mondays, 7 with full history
    with pytest.warns(ShortfallWarning):
        sel = select_for_date(date, ds, np.zeros(96), k=12)
    assert len(sel.chosen) == 7


def test_identical_window_ranked_first():
    ds = make_dataset()
    target = START + dt.timedelta(days=30)
    # a query built from a past day's own measurements matches that day exactly
    date = START + dt.timedelta(days=65)
    past = ds.get(target)
    prev = ds.get(target - dt.timedelta(days=1))
    days = list(ds.days)
    idx = next(i for i, d in enumerate(days) if d.date == date - dt.timedelta(days=1))
    days[idx] = DayRecord(days[idx].date, days[idx].day_type, prev.t_out, days[idx].load, True)
    ds2 = Dataset(tuple(days))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sel = select_for_date(date, ds2, past.t_out, k=3)
    assert sel.ranked[0] == (target, 0.0)


def test_selection_deterministic():
    ds = make_dataset(seed=4)
    date = START + dt.timedelta(days=59)
    a = select_for_date(date, ds, ds.get(date).t_out, k=10)
    b = select_for_date(date, ds, ds.get(date).t_out, k=10)
    assert a == b


def test_select_rejects_bad_k():
    ds = make_dataset()
    date = START + dt.timedelta(days=60)
    with pytest.raises(ValueError):
        select_relevant_days(build_query_window(date, ds, np.zeros(96)), [], k=0)
