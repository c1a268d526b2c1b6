"""Dynamic time warping with absolute-difference local cost.

Step pattern is the symmetric {(1,0), (0,1), (1,1)} with unit weights, so the
distance is the minimal sum of |a_i - b_j| over monotone, continuous paths
from (0, 0) to (p-1, q-1). An optional Sakoe-Chiba radius restricts cells to
|i - j| <= radius. Paths use 0-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numba as nb
import numpy as np

from .errors import BandInfeasible, EmptySeries, LengthMismatch

_JIT = dict(nogil=True, cache=True)


@dataclass(frozen=True)
class DtwResult:
    distance: float
    path: list[tuple[int, int]] | None = None
    band: int | None = None


@nb.njit(**_JIT)
def _dtw_rolling(a, b, radius):
    p, q = a.shape[0], b.shape[0]
    inf = np.inf
    prev = np.full(q, inf)
    cur = np.full(q, inf)
    for i in range(p):
        lo = 0 if radius < 0 else max(0, i - radius)
        hi = q if radius < 0 else min(q, i + radius + 1)
        for j in range(q):
            cur[j] = inf
        for j in range(lo, hi):
            cost = abs(a[i] - b[j])
            if i == 0 and j == 0:
                best = 0.0
            else:
                best = inf
                if i > 0:
                    best = prev[j]
                    if j > 0 and prev[j - 1] < best:
                        best = prev[j - 1]
                if j > 0 and cur[j - 1] < best:
                    best = cur[j - 1]
            cur[j] = cost + best
        prev, cur = cur, prev
    return prev[q - 1]


@nb.njit(**_JIT)
def _dtw_matrix(a, b, radius):
    p, q = a.shape[0], b.shape[0]
    D = np.full((p, q), np.inf)
    for i in range(p):
        lo = 0 if radius < 0 else max(0, i - radius)
        hi = q if radius < 0 else min(q, i + radius + 1)
        for j in range(lo, hi):
            cost = abs(a[i] - b[j])
            if i == 0 and j == 0:
                D[i, j] = cost
                continue
            best = np.inf
            if i > 0 and j > 0:
                best = D[i - 1, j - 1]
            if i > 0 and D[i - 1, j] < best:
                best = D[i - 1, j]
            if j > 0 and D[i, j - 1] < best:
                best = D[i, j - 1]
            D[i, j] = cost + best
    return D


def _backtrack(D: np.ndarray) -> list[tuple[int, int]]:
    i, j = D.shape[0] - 1, D.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            # diagonal preferred on ties
            moves = ((D[i - 1, j - 1], i - 1, j - 1), (D[i - 1, j], i - 1, j), (D[i, j - 1], i, j - 1))
            _, i, j = min(moves, key=lambda m: m[0])
        path.append((i, j))
    path.reverse()
    return path


def _as_series(x) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySeries("DTW needs non-empty series")
    return arr


def _radius(band: int | None, p: int, q: int) -> int:
    if band is None:
        return -1
    if band < 0:
        raise BandInfeasible(f"band radius must be >= 0, got {band}")
    if abs(p - q) > band:
        raise BandInfeasible(f"lengths {p} and {q} cannot be aligned within radius {band}")
    return int(band)


def dtw_distance(
    a: Sequence[float],
    b: Sequence[float],
    band: int | None = None,
    return_path: bool = False,
    normalize: bool = False,
) -> DtwResult:
    """DTW distance, optionally with the optimal warping path.

    ``normalize`` divides by ``len(a) + len(b)``; off by default since windows
    compared against each other always share a length.
    """
    a, b = _as_series(a), _as_series(b)
    radius = _radius(band, len(a), len(b))
    path = None
    if return_path:
        D = _dtw_matrix(a, b, radius)
        distance = float(D[-1, -1])
        path = _backtrack(D)
    else:
        distance = float(_dtw_rolling(a, b, radius))
    if normalize:
        distance /= len(a) + len(b)
    return DtwResult(distance, path, band)


def path_cost(a: Sequence[float], b: Sequence[float], path: Sequence[tuple[int, int]]) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(sum(abs(a[i] - b[j]) for i, j in path))


def envelope(series: np.ndarray, radius: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(series)
    lower = np.empty(n)
    upper = np.empty(n)
    for i in range(n):
        window = series[max(0, i - radius) : i + radius + 1]
        lower[i] = window.min()
        upper[i] = window.max()
    return lower, upper


def lb_keogh(query: Sequence[float], candidate: Sequence[float], band: int | None = None) -> float:
    """Envelope lower bound on banded DTW (``band=None`` means unbounded)."""
    q, c = _as_series(query), _as_series(candidate)
    if len(q) != len(c):
        raise LengthMismatch(f"LB_Keogh needs equal lengths, got {len(q)} and {len(c)}")
    radius = len(q) if band is None else int(band)
    if radius < 0:
        raise BandInfeasible(f"band radius must be >= 0, got {band}")
    lower, upper = envelope(q, radius)
    above = np.clip(c - upper, 0.0, None)
    below = np.clip(lower - c, 0.0, None)
    return float(above.sum() + below.sum())


def _order(scored: list[tuple[Hashable, float]]) -> list[tuple[Hashable, float]]:
    # ascending distance; ties go to the larger (more recent) id
    by_id = sorted(scored, key=lambda t: t[0], reverse=True)
    return sorted(by_id, key=lambda t: t[1])


def rank_candidates(
    query: Sequence[float],
    candidates: Sequence[tuple[Hashable, Sequence[float]]],
    band: int | None = None,
    k: int | None = None,
    prune: bool = True,
) -> list[tuple[Hashable, float]]:
    """Candidates ordered by DTW distance to ``query``, nearest first.

    With ``k`` set, only the top ``k`` are returned and candidates whose
    LB_Keogh already exceeds the current k-th best distance are skipped; the
    returned list is identical to the first ``k`` of the exhaustive ranking.
    """
    q = _as_series(query)
    if k is None or not prune or k >= len(candidates):
        scored = [(cid, dtw_distance(q, s, band).distance) for cid, s in candidates]
        ranked = _order(scored)
        return ranked if k is None else ranked[:k]

    bounds = []
    for pos, (cid, s) in enumerate(candidates):
        s = _as_series(s)
        lb = lb_keogh(q, s, band) if len(s) == len(q) else 0.0
        bounds.append((lb, pos, cid, s))
    bounds.sort(key=lambda t: (t[0], t[1]))
    scored: list[tuple[Hashable, float]] = []
    kth = np.inf
    for lb, _, cid, s in bounds:
        # strict: a candidate tying the k-th best may still win on recency
        if lb > kth:
            break
        scored.append((cid, dtw_distance(q, s, band).distance))
        if len(scored) >= k:
            kth = _order(scored)[k - 1][1]
    return _order(scored)[:k]
