"""epsilon-SVR with an RBF kernel, trained by an SMO-type dual solver.

The dual is solved in the doubled form over ``a = [alpha; alpha*]`` (length 2n)

    min  1/2 a' Q a + p' a    s.t.  z' a = 0,  0 <= a <= C

with ``z = [+1; -1]``, ``Q_st = z_s z_t K(x_s, x_t)`` and
``p = [eps - y; eps + y]``. The dual objective reported everywhere is the
maximisation form ``-(1/2 a'Qa + p'a)``. The regression function is
``f(x) = sum_i beta_i K(x_i, x) + b`` with ``beta = alpha - alpha*``.

Each iteration takes ``i`` as the maximal KKT violator and, by default,
the partner ``j`` giving the largest guaranteed objective gain (second-order
selection; ``second_order=False`` falls back to the maximal violating pair).
Ties go to the lowest index. The two-variable subproblem is solved
analytically and the solver stops once the violating-pair gap is below
``tol``. After every update any overlap between ``alpha_i`` and
``alpha*_i`` is cancelled; that leaves ``beta`` and the gradient unchanged
and keeps ``alpha_i * alpha*_i = 0`` throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from .dataset import Scaler
from .errors import DimensionMismatch, NotScaled, ScalerMismatch, SingularInput

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 10_000_000
GRAM_LIMIT = 2048
CACHE_MB = 256
MODEL_FORMAT = "reldays-svr"
MODEL_VERSION = 1

_JIT = dict(nogil=True, cache=True)
_TAU = 1e-12


@dataclass(frozen=True)
class SvrParams:
    C: float
    epsilon: float
    gamma: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    def as_dict(self) -> dict:
        return {"C": self.C, "gamma": self.gamma, "epsilon": self.epsilon}


@nb.njit(**_JIT)
def _sqdist(A, B):
    n, m = A.shape
    q = B.shape[0]
    out = np.empty((n, q))
    for i in range(n):
        for j in range(q):
            d = 0.0
            for f in range(m):
                diff = A[i, f] - B[j, f]
                d += diff * diff
            out[i, j] = d
    return out


@nb.njit(**_JIT)
def _kernel_row(X, k, gamma, out):
    n, m = X.shape
    for t in range(n):
        d = 0.0
        for f in range(m):
            diff = X[k, f] - X[t, f]
            d += diff * diff
        out[t] = math.exp(-gamma * d)


def sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"feature dimensions differ: {A.shape} vs {B.shape}")
    return _sqdist(A, B)


def rbf_kernel(x, z, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise DimensionMismatch(f"feature dimensions differ: {x.shape} vs {z.shape}")
    return float(np.exp(-gamma * np.sum((x - z) ** 2)))


def rbf_matrix(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * sqdist(A, B))


@nb.njit(**_JIT)
def _smo(K, X, gamma, y, C, eps, tol, max_iter, cache_rows, record_every, max_records, second_order):
    n = y.shape[0]
    n2 = 2 * n
    use_gram = K.shape[0] == n
    diag = np.ones(n)
    if use_gram:
        for k in range(n):
            diag[k] = K[k, k]

    a = np.zeros(n2)
    p = np.empty(n2)
    for k in range(n):
        p[k] = eps - y[k]
        p[k + n] = eps + y[k]
    G = p.copy()

    # bounded LRU cache of kernel rows when the Gram matrix is not supplied
    n_slots = 1
    if not use_gram:
        n_slots = max(2, min(cache_rows, n))
    cache = np.empty((n_slots, n if not use_gram else 1))
    slot_of = np.full(n, -1, dtype=np.int64)
    owner = np.full(n_slots, -1, dtype=np.int64)
    stamp = np.zeros(n_slots, dtype=np.int64)
    clock = 0

    rec_obj = np.empty(max_records)
    rec_iter = np.empty(max_records, dtype=np.int64)
    rec_a = np.empty((max_records, n2))
    n_rec = 0

    it = 0
    gap = np.inf
    while True:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for s in range(n2):
            if s < n:
                v = -G[s]
                if a[s] < C and v > gmax:
                    gmax = v
                    i = s
                if a[s] > 0.0 and v < gmin:
                    gmin = v
                    j = s
            else:
                v = G[s]
                if a[s] > 0.0 and v > gmax:
                    gmax = v
                    i = s
                if a[s] < C and v < gmin:
                    gmin = v
                    j = s
        gap = gmax - gmin

        if record_every > 0 and n_rec < max_records and (it % record_every == 0):
            obj = 0.0
            for s in range(n2):
                obj += a[s] * (G[s] + p[s])
            rec_obj[n_rec] = -0.5 * obj
            rec_iter[n_rec] = it
            rec_a[n_rec, :] = a
            n_rec += 1

        if gap < tol or i < 0 or j < 0 or it >= max_iter:
            break

        ki = i % n
        if use_gram:
            Ki = K[ki]
        else:
            clock += 1
            si = slot_of[ki]
            if si < 0:
                si = 0
                for t in range(n_slots):
                    if stamp[t] < stamp[si]:
                        si = t
                if owner[si] >= 0:
                    slot_of[owner[si]] = -1
                _kernel_row(X, ki, gamma, cache[si])
                owner[si] = ki
                slot_of[ki] = si
            stamp[si] = clock
            Ki = cache[si]

        if second_order:
            # j maximising the guaranteed objective decrease with i fixed
            best = np.inf
            for s in range(n2):
                if s < n:
                    if not a[s] > 0.0:
                        continue
                    v = -G[s]
                    k = s
                else:
                    if not a[s] < C:
                        continue
                    v = G[s]
                    k = s - n
                diff = gmax - v
                if diff <= 0.0:
                    continue
                quad = Ki[ki] + diag[k] - 2.0 * Ki[k]
                if quad <= 0.0:
                    quad = _TAU
                score = -(diff * diff) / quad
                if score < best:
                    best = score
                    j = s

        kj = j % n
        zi = 1.0 if i < n else -1.0
        zj = 1.0 if j < n else -1.0
        if use_gram:
            Kj = K[kj]
        else:
            clock += 1
            sj = slot_of[kj]
            if sj < 0:
                sj = 0
                for t in range(n_slots):
                    if t != si and (sj == si or stamp[t] < stamp[sj]):
                        sj = t
                if owner[sj] >= 0:
                    slot_of[owner[sj]] = -1
                _kernel_row(X, kj, gamma, cache[sj])
                owner[sj] = kj
                slot_of[kj] = sj
            stamp[sj] = clock
            Kj = cache[sj]

        qij = zi * zj * Ki[kj]
        ai_old = a[i]
        aj_old = a[j]
        if zi != zj:
            quad = Ki[ki] + Kj[kj] + 2.0 * qij
            if quad <= 0.0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0.0:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0.0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad = Ki[ki] + Kj[kj] - 2.0 * qij
            if quad <= 0.0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = total

        u = zi * (a[i] - ai_old)
        w = zj * (a[j] - aj_old)
        for k in range(n):
            d = Ki[k] * u + Kj[k] * w
            G[k] += d
            G[k + n] -= d

        for k in (ki, kj):
            overlap = min(a[k], a[k + n])
            if overlap > 0.0:
                a[k] -= overlap
                a[k + n] -= overlap
        it += 1

    # bias from free variables, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for s in range(n2):
        zs = 1.0 if s < n else -1.0
        yg = zs * G[s]
        if a[s] >= C:
            if zs < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif a[s] <= 0.0:
            if zs > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)

    obj = 0.0
    for s in range(n2):
        obj += a[s] * (G[s] + p[s])
    return a, G, it, max(gap, 0.0), -rho, -0.5 * obj, rec_obj[:n_rec], rec_iter[:n_rec], rec_a[:n_rec]


@dataclass
class TrainState:
    alpha: np.ndarray
    alpha_star: np.ndarray
    gradient: np.ndarray
    iterations: int
    kkt: float
    objective: float
    bias: float
    converged: bool
    history_objective: np.ndarray = field(default_factory=lambda: np.empty(0))
    history_iteration: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    history_alpha: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    @property
    def beta(self) -> np.ndarray:
        return self.alpha - self.alpha_star


def _cache_rows(n: int, cache_mb: float) -> int:
    return max(2, int(cache_mb * 2**20 // (8 * max(n, 1))))


def solve_dual(
    X: np.ndarray,
    y: np.ndarray,
    params: SvrParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    gram: np.ndarray | None = None,
    record_every: int = 0,
    max_records: int = 10_000,
    cache_mb: float = CACHE_MB,
    second_order: bool = True,
) -> TrainState:
    """Run the solver on already scaled rows ``X`` and targets ``y``.

    The Gram matrix is built up front for ``n <= 2048`` unless given; larger
    problems compute kernel rows on demand behind a bounded LRU cache.
    ``record_every > 0`` snapshots the duals and objective at that stride.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatch(f"X {X.shape} and y {y.shape} do not align")
    if len(y) < 2:
        raise ValueError("need at least two training rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise SingularInput("non-finite values in training data")
    n = len(y)
    if gram is None and n <= GRAM_LIMIT:
        gram = rbf_matrix(X, X, params.gamma)
    K = np.ascontiguousarray(gram, dtype=float) if gram is not None else np.empty((0, 0))
    if gram is not None and K.shape != (n, n):
        raise DimensionMismatch(f"Gram matrix {K.shape} does not match {n} rows")
    a, G, it, gap, bias, obj, h_obj, h_it, h_a = _smo(
        K,
        X,
        float(params.gamma),
        y,
        float(params.C),
        float(params.epsilon),
        float(tol),
        int(max_iter),
        _cache_rows(n, cache_mb),
        int(record_every),
        int(max_records) if record_every > 0 else 0,
        bool(second_order),
    )
    return TrainState(
        alpha=a[:n].copy(),
        alpha_star=a[n:].copy(),
        gradient=G,
        iterations=int(it),
        kkt=float(gap),
        objective=float(obj),
        bias=float(bias),
        converged=bool(gap < tol),
        history_objective=h_obj,
        history_iteration=h_it,
        history_alpha=h_a,
    )


def dual_objective(alpha: np.ndarray, alpha_star: np.ndarray, K: np.ndarray, y: np.ndarray, epsilon: float) -> float:
    beta = alpha - alpha_star
    return float(-0.5 * beta @ K @ beta - epsilon * np.sum(alpha + alpha_star) + y @ beta)


def kkt_violation(
    alpha: np.ndarray,
    alpha_star: np.ndarray,
    K: np.ndarray,
    y: np.ndarray,
    epsilon: float,
    C: float,
) -> float:
    """Maximal violating-pair gap of the dual optimality conditions (0 at the optimum).

    Computed from scratch: the largest ``-z_s grad_s`` over variables that may
    still move up, minus the smallest over those that may move down.
    """
    alpha = np.asarray(alpha, float)
    alpha_star = np.asarray(alpha_star, float)
    kb = np.asarray(K, float) @ (alpha - alpha_star)
    g_plus = kb + epsilon - y  # gradient wrt alpha, z = +1
    g_minus = -kb + epsilon + y  # gradient wrt alpha*, z = -1
    up = np.concatenate([-g_plus[alpha < C], g_minus[alpha_star > 0]])
    low = np.concatenate([-g_plus[alpha > 0], g_minus[alpha_star < C]])
    if up.size == 0 or low.size == 0:
        return 0.0
    return float(max(up.max() - low.min(), 0.0))


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray
    coefficients: np.ndarray
    bias: float
    params: SvrParams
    scaler: Scaler | None = None
    iterations: int = 0
    kkt: float = 0.0
    converged: bool = True

    @property
    def n_support(self) -> int:
        return len(self.coefficients)

    def decision_function(self, Z: np.ndarray) -> np.ndarray:
        """Scaled-unit prediction for already scaled rows."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if self.n_support == 0:
            return np.full(len(Z), self.bias)
        if Z.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(f"expected {self.support_vectors.shape[1]} features, got {Z.shape[1]}")
        return rbf_matrix(Z, self.support_vectors, self.params.gamma) @ self.coefficients + self.bias

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "params": self.params.as_dict(),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "support_vectors": [[float(v) for v in row] for row in self.support_vectors],
            "coefficients": [float(v) for v in self.coefficients],
            "bias": float(self.bias),
            "convergence": {"iterations": self.iterations, "kkt": self.kkt, "converged": self.converged},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model document {d.get('format')!r} v{d.get('version')}")
        p = d["params"]
        conv = d["convergence"]
        sv = np.array(d["support_vectors"], dtype=float)
        return cls(
            support_vectors=sv.reshape(len(d["coefficients"]), -1) if sv.size else sv.reshape(0, 0),
            coefficients=np.array(d["coefficients"], dtype=float),
            bias=float(d["bias"]),
            params=SvrParams(p["C"], p["epsilon"], p["gamma"]),
            scaler=None if d["scaler"] is None else Scaler.from_dict(d["scaler"]),
            iterations=conv["iterations"],
            kkt=conv["kkt"],
            converged=conv["converged"],
        )


def save_model(model: SvrModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n")


def load_model(path: str | Path) -> SvrModel:
    return SvrModel.from_dict(json.loads(Path(path).read_text()))


def fit_arrays(
    X: np.ndarray,
    y: np.ndarray,
    params: SvrParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    gram: np.ndarray | None = None,
    scaler: Scaler | None = None,
) -> SvrModel:
    state = solve_dual(X, y, params, tol=tol, max_iter=max_iter, gram=gram)
    beta = state.beta
    keep = beta != 0.0
    return SvrModel(
        support_vectors=np.ascontiguousarray(np.asarray(X, float)[keep]),
        coefficients=beta[keep],
        bias=state.bias,
        params=params,
        scaler=scaler,
        iterations=state.iterations,
        kkt=state.kkt,
        converged=state.converged,
    )


def train_svr(matrix, params: SvrParams, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SvrModel:
    """Train on a scaled feature matrix with targets."""
    if matrix.scaler is None:
        raise NotScaled("training matrix must be standardised first")
    if matrix.y is None:
        raise ValueError("training matrix has no targets")
    return fit_arrays(matrix.X, matrix.y, params, tol=tol, max_iter=max_iter, scaler=matrix.scaler)


def predict(model: SvrModel, rows) -> np.ndarray:
    """Predicted load in kW for rows scaled with ``model.scaler``."""
    if hasattr(rows, "X"):
        if rows.scaler is None or (model.scaler is not None and rows.scaler != model.scaler):
            raise ScalerMismatch("rows were not scaled with the model's scaler")
        rows = rows.X
    f = model.decision_function(rows)
    return f if model.scaler is None else model.scaler.inverse_target(f)
