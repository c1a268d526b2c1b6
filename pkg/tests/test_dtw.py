import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reldays.dtw import dtw_distance, lb_keogh, path_cost, rank_candidates
from reldays.errors import BandInfeasible, EmptySeries, LengthMismatch


def brute_force(a, b):
    """Minimum accumulated |a_i - b_j| over every monotone continuous path."""
    p, q = len(a), len(b)
    best = np.inf

    def walk(i, j, acc):
        nonlocal best
        acc += abs(a[i] - b[j])
        if acc >= best:
            return
        if i == p - 1 and j == q - 1:
            best = acc
            return
        if i + 1 < p:
            walk(i + 1, j, acc)
        if j + 1 < q:
            walk(i, j + 1, acc)
        if i + 1 < p and j + 1 < q:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return best


series = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=24)


def test_identity_and_diagonal_path():
    a = [3.0, 1.0, 4.0, 1.0, 5.0]
    res = dtw_distance(a, a, return_path=True)
    assert res.distance == 0.0
    assert res.path == [(i, i) for i in range(5)]


def test_repeated_value_warps_for_free():
    assert dtw_distance([1, 2, 3], [1, 2, 2, 3]).distance == 0.0


def test_constant_offset_pair():
    assert dtw_distance([0, 0], [1, 1]).distance == 2.0


def test_small_exhaustive_matches_brute_force():
    values = (0.0, 1.0, 2.0)
    for p, q in [(1, 3), (2, 2), (3, 2), (3, 3)]:
        for a in itertools.product(values, repeat=p):
            for b in itertools.product(values, repeat=q):
                assert dtw_distance(a, b).distance == brute_force(a, b)


def test_errors():
    with pytest.raises(EmptySeries):
        dtw_distance([], [1.0])
    with pytest.raises(BandInfeasible):
        dtw_distance([1.0] * 5, [1.0] * 9, band=2)
    with pytest.raises(BandInfeasible):
        dtw_distance([1.0], [1.0], band=-1)
    with pytest.raises(LengthMismatch):
        lb_keogh([1.0, 2.0], [1.0])


@given(series, series)
def test_path_is_admissible_and_costs_the_distance(a, b):
    res = dtw_distance(a, b, return_path=True)
    path = res.path
    assert path[0] == (0, 0) and path[-1] == (len(a) - 1, len(b) - 1)
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        assert (i1 - i0, j1 - j0) in {(1, 0), (0, 1), (1, 1)}
    assert abs(path_cost(a, b, path) - res.distance) <= 1e-9 * max(1.0, res.distance)
    assert abs(dtw_distance(a, b).distance - res.distance) <= 1e-9 * max(1.0, res.distance)


@given(series, series)
def test_symmetric_and_non_negative(a, b):
    d = dtw_distance(a, b).distance
    assert d >= 0
    assert abs(d - dtw_distance(b, a).distance) <= 1e-9 * max(1.0, d)


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-20, 20), min_size=n, max_size=n),
    st.lists(st.floats(-20, 20), min_size=n, max_size=n),
    st.one_of(st.none(), st.integers(0, 8)),
)))
def test_lower_bound_and_diagonal_bound(args):
    a, b, band = args
    d = dtw_distance(a, b, band=band).distance
    assert lb_keogh(a, b, band) <= d + 1e-9
    assert d <= float(np.abs(np.subtract(a, b)).sum()) + 1e-9


def test_band_zero_is_lockstep():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=20), rng.normal(size=20)
    assert dtw_distance(a, b, band=0).distance == pytest.approx(np.abs(a - b).sum(), abs=1e-12)


def test_band_never_lowers_distance():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=40), rng.normal(size=40)
    free = dtw_distance(a, b).distance
    for r in (0, 2, 5, 39):
        assert dtw_distance(a, b, band=r).distance >= free - 1e-12


def test_lb_keogh_zero_inside_envelope():
    q = np.array([0.0, 2.0, 0.0, 2.0, 0.0])
    assert lb_keogh(q, q, 1) == 0.0
    assert lb_keogh(q, np.ones(5), 1) == 0.0


def test_normalized_distance():
    a, b = [0.0, 0.0, 0.0], [1.0, 1.0]
    assert dtw_distance(a, b, normalize=True).distance == pytest.approx(3.0 / 5.0)


def test_rank_query_equal_to_candidate_is_first():
    rng = np.random.default_rng(5)
    q = rng.normal(size=16)
    cands = [(i, rng.normal(size=16)) for i in range(6)] + [(99, q.copy())]
    assert rank_candidates(q, cands)[0] == (99, 0.0)


def test_rank_ties_prefer_recent_id():
    q = np.zeros(4)
    cands = [(1, np.ones(4)), (3, -np.ones(4)), (2, np.ones(4))]
    assert [c for c, _ in rank_candidates(q, cands)] == [3, 2, 1]
    assert [c for c, _ in rank_candidates(q, cands, k=2)] == [3, 2]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12), st.one_of(st.none(), st.integers(0, 6)))
def test_pruned_ranking_equals_exhaustive(seed, k, band):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=24)
    # rounded values make exact ties common
    cands = [(i, np.round(q + rng.normal(scale=1.0, size=24), 0)) for i in range(50)]
    full = rank_candidates(q, cands, band=band)
    assert rank_candidates(q, cands, band=band, k=k) == full[:k]
    dists = [d for _, d in full]
    assert dists == sorted(dists)
