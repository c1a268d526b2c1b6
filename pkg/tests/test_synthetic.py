import dataclasses
import datetime as dt
import hashlib

import numpy as np
import pytest

from reldays.dataset import DayType, ingest_csv
from reldays.errors import InvalidScenario
from reldays.features import ProfileConfig, load_profiles
from reldays.pipeline import read_forecast
from reldays.synthetic import Scenario, default_profiles, generate_synthetic, write_corpus


@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic(60, seed=3)


def digest(folder):
    h = hashlib.sha256()
    for p in sorted(folder.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(folder).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_same_seed_same_bytes(tmp_path):
    for name in ("a", "b"):
        write_corpus(generate_synthetic(35, seed=9), tmp_path / name)
    assert digest(tmp_path / "a") == digest(tmp_path / "b")
    write_corpus(generate_synthetic(35, seed=10), tmp_path / "c")
    assert digest(tmp_path / "a") != digest(tmp_path / "c")


def test_temperature_bounds(corpus):
    lo, hi = corpus.scenario.t_bounds
    assert lo <= corpus.t_out.min() and corpus.t_out.max() <= hi
    assert lo < corpus.t_out.mean() < hi


def test_unoccupied_load_is_low(corpus):
    occupied = corpus.level > 0
    assert corpus.load[~occupied].mean() < 0.2 * corpus.load[occupied].mean()
    assert (corpus.load >= 0).all()


def test_profiles_differ_between_day_types():
    prof = default_profiles()
    assert not np.array_equal(prof.profile(DayType.WORKING_OTHER), prof.profile(DayType.SATURDAY))
    assert prof.profile(DayType.SUNDAY).max() < prof.profile(DayType.WORKING_OTHER).max()


def test_occupancy_off_gives_near_zero_load():
    quiet = generate_synthetic(30, seed=1, profiles=ProfileConfig.flat(0.0))
    busy = generate_synthetic(30, seed=1)
    assert quiet.load.mean() < 0.2 * busy.load[busy.level > 0].mean()


def test_scenario_validation():
    with pytest.raises(InvalidScenario):
        generate_synthetic(29)
    with pytest.raises(InvalidScenario):
        generate_synthetic(30, scenario=dataclasses.replace(Scenario(), t_bounds=(5.0, 1.0)))
    with pytest.raises(InvalidScenario):
        generate_synthetic(30, scenario=dataclasses.replace(Scenario(), synoptic_phi=1.0))
    with pytest.raises(InvalidScenario):
        generate_synthetic(30, scenario=dataclasses.replace(Scenario(), t_setback=25.0))


def test_written_corpus_ingests(tmp_path):
    c = generate_synthetic(32, seed=2)
    paths = write_corpus(c, tmp_path, forecast_noise_sd=0.5, seed=2)
    ds = ingest_csv(paths["data"])
    assert len(ds) == 32 and all(d.complete for d in ds)
    assert np.allclose(np.concatenate([d.t_out for d in ds]), c.t_out)
    load_profiles(paths["profiles"])
    first = c.dates[0]
    fc = read_forecast(paths["forecasts"] / f"{first.isoformat()}.csv")
    assert fc.shape == (96,)
    assert 0 < np.abs(fc - c.t_out[:96]).mean() < 2.0


def test_starts_on_scenario_date(corpus):
    assert corpus.timestamps[0] == dt.datetime.combine(corpus.scenario.start, dt.time())
    assert len(corpus.dates) == 60
