import datetime as dt
import json
import math

import numpy as np
import pytest

from reldays.dataset import ingest_csv
from reldays.errors import DataError, EmptyReport, IoFailure
from reldays.features import load_profiles
from reldays.pipeline import PredictionReport, RunConfig, run, run_relevant, run_whole, sweep_k
from reldays.report import emit_comparison, emit_report, load_summary, read_predictions
from reldays.synthetic import generate_synthetic, write_corpus
from reldays.tuning import GridSpec, r2, rmse

TINY = GridSpec([2.0], [0.5], [0.1])


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    paths = write_corpus(generate_synthetic(56, seed=5), out)
    ds = ingest_csv(paths["data"])
    return paths, ds, load_profiles(paths["profiles"])


def config(ds, days=3, **kw):
    last = ds.days[-1].date
    base = dict(k=5, grid=TINY, test_start=last - dt.timedelta(days=days - 1), test_end=last)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture(scope="module")
def relevant(corpus):
    _, ds, prof = corpus
    return run_relevant(config(ds), ds, prof)


@pytest.fixture(scope="module")
def whole(corpus):
    _, ds, prof = corpus
    return run_whole(config(ds, mode="whole"), ds, prof)


def test_relevant_trains_one_model_per_day(relevant):
    assert len(relevant.days) == 3 and len(relevant.models) == 3
    for d in relevant.days:
        assert d.status == "ok" and d.n_train_rows == 480
        assert d.y_pred.shape == (96,) and d.r2 is not None
        assert all(s < d.date for s, _ in d.selected)


def test_whole_trains_two_models(whole):
    assert [m.key for m in whole.models] == ["Working", "Weekend"]
    assert all(d.status == "ok" for d in whole.days)


def test_aggregate_recomputes(relevant):
    agg = relevant.aggregate()
    days = relevant.scored_days()
    yt = np.concatenate([d.y_true for d in days])
    yp = np.concatenate([d.y_pred for d in days])
    assert agg["r2"] == pytest.approx(r2(yt, yp), abs=1e-12)
    assert agg["rmse"] == pytest.approx(rmse(yt, yp), abs=1e-12)
    assert agg["mean_r2"] == pytest.approx(np.mean([d.r2 for d in days]), abs=1e-12)


def test_emit_and_recompute(relevant, tmp_path):
    files = emit_report(relevant, tmp_path)
    assert set(files) == {"predictions.csv", "metrics.json", "actual_vs_predicted.csv", "timing.json"}
    lines = (tmp_path / "predictions.csv").read_text().splitlines()
    assert lines[0] == "timestamp,y_true,y_pred" and len(lines) == 1 + 288
    yt, yp = read_predictions(tmp_path / "predictions.csv")
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert abs(metrics["aggregate"]["All"]["r2"] - r2(yt, yp)) <= 1e-9
    assert abs(metrics["aggregate"]["All"]["rmse"] - rmse(yt, yp)) <= 1e-9
    assert "seconds" not in (tmp_path / "metrics.json").read_text()


def test_empty_report_writes_nothing(tmp_path):
    with pytest.raises(EmptyReport):
        emit_report(PredictionReport("relevant", 12, [], []), tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_unwritable_target(relevant, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoFailure):
        emit_report(relevant, blocker / "sub")


def test_same_schema_and_comparison(relevant, whole, tmp_path):
    emit_report(relevant, tmp_path / "rel")
    emit_report(whole, tmp_path / "whole")
    a = load_summary(tmp_path / "rel")["metrics"]
    b = load_summary(tmp_path / "whole")["metrics"]
    assert a.keys() == b.keys() and a["days"][0].keys() == b["days"][0].keys()
    text = emit_comparison(tmp_path / "rel", tmp_path / "whole", tmp_path)
    header = text.splitlines()[0].split()
    assert header == ["relevant/working", "relevant/weekend", "whole/working", "whole/weekend"]
    assert (tmp_path / "comparison.txt").read_text() == text


def test_reports_are_deterministic(corpus, relevant, tmp_path):
    _, ds, prof = corpus
    again = run_relevant(config(ds), ds, prof)
    emit_report(relevant, tmp_path / "a")
    emit_report(again, tmp_path / "b")
    for name in ("predictions.csv", "metrics.json", "actual_vs_predicted.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_forecast_day_is_reported_not_dropped(corpus, tmp_path):
    paths, ds, prof = corpus
    last = ds.days[-1].date
    (paths["forecasts"] / f"{last.isoformat()}.csv").rename(tmp_path / "moved.csv")
    try:
        rep = run_relevant(config(ds, days=2, forecasts=paths["forecasts"]), ds, prof)
    finally:
        (tmp_path / "moved.csv").rename(paths["forecasts"] / f"{last.isoformat()}.csv")
    assert rep.days[-1].status.startswith("skipped")
    assert rep.aggregate()["n_skipped"] == 1 and rep.aggregate()["n_days"] == 1


def test_day_without_truth_still_predicted(corpus):
    _, ds, prof = corpus
    from reldays.dataset import Dataset, DayRecord

    last = ds.days[-1]
    blank = DayRecord(last.date, last.day_type, last.t_out, np.full(96, np.nan), False)
    ds2 = Dataset(ds.days[:-1] + (blank,))
    rep = run_relevant(config(ds2, days=1), ds2, prof)
    d = rep.days[0]
    assert d.y_pred is not None and d.r2 is None and not d.scored


def test_test_period_outside_span(corpus):
    _, ds, prof = corpus
    cfg = config(ds, test_end=ds.days[-1].date + dt.timedelta(days=1))
    with pytest.raises(DataError):
        run(cfg, ds, prof)


def test_noisy_forecast_changes_predictions(corpus, relevant):
    _, ds, prof = corpus
    noisy = run_relevant(config(ds, forecast_noise=1.0), ds, prof)
    assert not np.array_equal(noisy.days[0].y_pred, relevant.days[0].y_pred)


def test_sweep_single_k_matches_direct_run(corpus, relevant):
    _, ds, prof = corpus
    rows, best = sweep_k(config(ds), [5], ds, prof)
    assert len(rows) == 1 and best == 5
    assert rows[0].r2 == relevant.aggregate()["r2"]
    assert math.isclose(rows[0].mean_rmse, relevant.aggregate()["mean_rmse"])


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(mode="both")
    with pytest.raises(ValueError):
        RunConfig(k=0)
