"""Cross-validation, grid search and the evaluation metrics."""

from __future__ import annotations

import itertools
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import SLOTS_PER_DAY, DegenerateColumn, fit_scaler
from .errors import DegenerateActual, DegenerateSeries, LengthMismatch, TooFewSamples
from .features import FeatureMatrix
from .svr import DEFAULT_MAX_ITER, DEFAULT_TOL, GRAM_LIMIT, SvrParams, solve_dual, sqdist

EPSILONS = (0.001, 0.01, 0.1, 0.2, 0.5)
DESK_STRIDE = 5
DESK_EPSILONS = (0.1,)


def _pow2(lo: int, hi: int) -> tuple[float, ...]:
    return tuple(2.0**e for e in range(lo, hi + 1))


@dataclass(frozen=True)
class GridSpec:
    C: tuple[float, ...]
    gamma: tuple[float, ...]
    epsilon: tuple[float, ...]

    def __post_init__(self):
        for name in ("C", "gamma", "epsilon"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ValueError(f"grid has no {name} values")
            object.__setattr__(self, name, values)

    def __len__(self):
        return len(self.C) * len(self.gamma) * len(self.epsilon)

    def cells(self) -> list[SvrParams]:
        """Row-major C -> gamma -> epsilon."""
        return [SvrParams(c, e, g) for c, g, e in itertools.product(self.C, self.gamma, self.epsilon)]

    def thinned(self, c_step: int = 1, gamma_step: int = 1, epsilons: Sequence[float] | None = None) -> "GridSpec":
        return GridSpec(self.C[::c_step], self.gamma[::gamma_step], self.epsilon if epsilons is None else tuple(epsilons))

    def to_dict(self) -> dict:
        return {"C": list(self.C), "gamma": list(self.gamma), "epsilon": list(self.epsilon)}

    @classmethod
    def relevant(cls) -> "GridSpec":
        return cls(_pow2(-5, 5), _pow2(-15, 15), EPSILONS)

    @classmethod
    def whole(cls) -> "GridSpec":
        return cls(_pow2(-5, 15), _pow2(-15, 15), EPSILONS)

    @classmethod
    def desk(cls, preset: str) -> "GridSpec":
        """Every fifth C and gamma of a preset with epsilon fixed at 0.1, for single-CPU runs."""
        return cls.resolve(preset).thinned(DESK_STRIDE, DESK_STRIDE, DESK_EPSILONS)

    @classmethod
    def load(cls, path: str | Path) -> "GridSpec":
        raw = json.loads(Path(path).read_text())
        missing = {"C", "gamma", "epsilon"} - set(raw)
        if missing:
            raise ValueError(f"{path}: grid file lacks {sorted(missing)}")
        return cls(raw["C"], raw["gamma"], raw["epsilon"])

    @classmethod
    def resolve(cls, name: "str | GridSpec") -> "GridSpec":
        if isinstance(name, GridSpec):
            return name
        if name == "relevant":
            return cls.relevant()
        if name == "whole":
            return cls.whole()
        if name in ("relevant-desk", "whole-desk"):
            return cls.desk(name.split("-")[0])
        return cls.load(name)


def kfold_split(
    n: int,
    k: int = 5,
    seed: int = 0,
    day_length: int = SLOTS_PER_DAY,
    day_blocked: bool = True,
) -> list[np.ndarray]:
    """``k`` disjoint sorted index arrays covering ``range(n)``.

    When ``n`` is a whole number of days (and there are at least ``k`` days)
    the folds are made of whole days; fold sizes then differ by at most one
    day, the larger folds first.
    """
    if k < 2 or n < k:
        raise TooFewSamples(f"cannot split {n} samples into {k} folds")
    rng = np.random.default_rng(seed)
    if day_blocked and day_length > 0 and n % day_length == 0 and n // day_length >= k:
        days = rng.permutation(n // day_length)
        groups = np.array_split(days, k)
        return [np.sort(np.concatenate([np.arange(d * day_length, (d + 1) * day_length) for d in g])) for g in groups]
    return [np.sort(g) for g in np.array_split(rng.permutation(n), k)]


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float).ravel()
    p = np.asarray(predicted, dtype=float).ravel()
    if len(a) != len(p):
        raise LengthMismatch(f"{len(a)} actual vs {len(p)} predicted values")
    if len(a) == 0:
        raise LengthMismatch("metrics need at least one value")
    return a, p


def r2(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateActual("actual values have zero variance")
    return 1.0 - float(np.sum((a - p) ** 2)) / ss_tot


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return math.sqrt(float(np.mean((a - p) ** 2)))


def pearson_r(x, y) -> float:
    x, y = _pair(x, y)
    if len(x) < 2:
        raise DegenerateSeries("correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSeries("correlation of a constant series is undefined")
    return max(-1.0, min(1.0, float(dx @ dy) / (sx * sy)))


@dataclass
class CvResult:
    params: SvrParams
    fold_r2: list[float]
    fold_rmse: list[float]
    train_seconds: float = 0.0
    capped: bool = False
    mean_r2: float = field(init=False)
    mean_rmse: float = field(init=False)

    def __post_init__(self):
        self.mean_r2 = float(np.mean(self.fold_r2))
        self.mean_rmse = float(np.mean(self.fold_rmse))


def _rank_key(res: CvResult):
    r2_ = res.mean_r2 if math.isfinite(res.mean_r2) else -math.inf
    p = res.params
    return (res.mean_rmse, -r2_, p.C, p.gamma, -p.epsilon)


def best_cell(results: Sequence[CvResult]) -> CvResult:
    """Minimum mean RMSE, then maximum mean R2, then smaller C, smaller gamma, larger epsilon."""
    return min(results, key=_rank_key)


def _scaled_fold(matrix: FeatureMatrix, train_idx, test_idx):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateColumn)
        scaler = fit_scaler(matrix.X[train_idx], matrix.y[train_idx])
    return (
        scaler,
        scaler.transform(matrix.X[train_idx]),
        scaler.transform_target(matrix.y[train_idx]),
        scaler.transform(matrix.X[test_idx]),
        matrix.y[test_idx],
    )


def _safe_r2(actual, predicted) -> float:
    try:
        return r2(actual, predicted)
    except DegenerateActual:
        return math.nan


def grid_search(
    matrix: FeatureMatrix,
    grid: GridSpec,
    k: int = 5,
    seed: int = 0,
    day_blocked: bool = True,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[SvrParams, list[CvResult]]:
    """k-fold CV over every grid cell; the scaler is re-fit on each fold's training rows.

    Fold metrics are in original load units. Results come back in row-major
    C -> gamma -> epsilon order; cells whose solver hit ``max_iter`` are
    kept and flagged ``capped``.
    """
    if matrix.y is None:
        raise ValueError("grid search needs targets")
    if matrix.scaled:
        raise ValueError("grid search expects an unscaled matrix")
    folds = kfold_split(len(matrix), k, seed, day_blocked=day_blocked)
    all_idx = np.arange(len(matrix))
    cells = grid.cells()
    r2s = {c: [] for c in cells}
    rmses = {c: [] for c in cells}
    seconds = {c: 0.0 for c in cells}
    capped = {c: False for c in cells}

    for test_idx in folds:
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
        scaler, Xtr, ytr, Xte, yte = _scaled_fold(matrix, train_idx, test_idx)
        small = len(train_idx) <= GRAM_LIMIT
        D_train = sqdist(Xtr, Xtr) if small else None
        D_cross = sqdist(Xte, Xtr)
        for gamma in grid.gamma:
            gram = np.exp(-gamma * D_train) if small else None
            K_cross = np.exp(-gamma * D_cross)
            for C in grid.C:
                for eps in grid.epsilon:
                    cell = SvrParams(C, eps, gamma)
                    t0 = time.perf_counter()
                    state = solve_dual(Xtr, ytr, cell, tol=tol, max_iter=max_iter, gram=gram)
                    seconds[cell] += time.perf_counter() - t0
                    capped[cell] |= not state.converged
                    pred = scaler.inverse_target(K_cross @ state.beta + state.bias)
                    r2s[cell].append(_safe_r2(yte, pred))
                    rmses[cell].append(rmse(yte, pred))

    results = [CvResult(c, r2s[c], rmses[c], seconds[c], capped[c]) for c in cells]
    return best_cell(results).params, results
