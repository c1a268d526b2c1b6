"""Reference epsilon-SVR dual solver for small problems.

Dense accelerated projected gradient on the doubled dual, followed by an
active-set polish that solves the equality-constrained KKT system on the
free variables and accepts it only if every optimality condition holds.
Shares no code with the production solver.
"""

import numpy as np


def doubled_problem(K, y, epsilon):
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    Q = np.outer(z, z) * np.tile(K, (2, 2))
    p = np.concatenate([epsilon - y, epsilon + y])
    return Q, p, z


def project(v, z, C):
    """Euclidean projection onto {0 <= a <= C, z'a = 0} via exact breakpoint search."""

    breaks = np.unique(np.concatenate([v * z, (v - C) * z]))
    vals = (np.clip(v[None, :] - breaks[:, None] * z[None, :], 0.0, C) * z).sum(axis=1)
    # h is non-increasing in lambda
    if vals[0] <= 0.0:
        lam = breaks[0]
        if vals[0] < 0.0:
            raise ValueError("infeasible projection")
    elif vals[-1] >= 0.0:
        lam = breaks[-1]
        if vals[-1] > 0.0:
            raise ValueError("infeasible projection")
    else:
        k = np.flatnonzero(vals <= 0.0)[0]
        l0, l1, h0, h1 = breaks[k - 1], breaks[k], vals[k - 1], vals[k]
        lam = l0 + (l1 - l0) * h0 / (h0 - h1) if h0 != h1 else l0
    return np.clip(v - lam * z, 0.0, C)


def _polish(a, Q, p, z, C, snap, tol=1e-10):
    n2 = len(a)
    n = n2 // 2
    # alpha_k and alpha*_k overlapping is never better for eps >= 0
    a = a.copy()
    overlap = np.minimum(a[:n], a[n:])
    a[:n] -= overlap
    a[n:] -= overlap
    at_low = a <= snap * C
    at_up = a >= C * (1 - snap)
    free = ~(at_low | at_up)
    fixed = np.where(at_up, C, 0.0)
    F = np.flatnonzero(free)
    B = np.flatnonzero(~free)
    x = fixed.copy()
    nF = len(F)
    if nF:
        A = np.zeros((nF + 1, nF + 1))
        A[:nF, :nF] = Q[np.ix_(F, F)]
        A[:nF, nF] = z[F]
        A[nF, :nF] = z[F]
        rhs = np.concatenate([-(p[F] + Q[np.ix_(F, B)] @ fixed[B]), [-(z[B] @ fixed[B])]])
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
        x[F] = sol[:nF]
        nu = sol[nF]
        if np.any(x[F] < -tol) or np.any(x[F] > C + tol):
            return None
        x[F] = np.clip(x[F], 0.0, C)
    else:
        g = Q @ x + p
        # any nu in the interval allowed by the bound conditions
        # at_low: g + nu z >= 0 ; at_up: g + nu z <= 0
        lo = [-g[s] * z[s] for s in range(n2) if (at_low[s] and z[s] > 0) or (at_up[s] and z[s] < 0)]
        hi = [-g[s] * z[s] for s in range(n2) if (at_low[s] and z[s] < 0) or (at_up[s] and z[s] > 0)]
        nu = 0.5 * (max(lo, default=0.0) + min(hi, default=0.0))
    if abs(z @ x) > 1e-9 * max(C, 1.0):
        return None
    g = Q @ x + p
    r = g + nu * z
    scale = max(1.0, np.abs(p).max())
    if nF and np.abs(r[F]).max() > 1e-8 * scale:
        return None
    lowm = at_low & ~free
    upm = at_up & ~free
    if np.any(r[lowm] < -1e-8 * scale) or np.any(r[upm] > 1e-8 * scale):
        return None
    return x


def solve(K, y, C, epsilon, max_iter=200_000, polish_every=200):
    """Return (alpha, alpha_star, dual objective in maximisation form)."""
    K = np.asarray(K, float)
    y = np.asarray(y, float)
    n = len(y)
    Q, p, z = doubled_problem(K, y, epsilon)
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(2 * n)
    yk = a.copy()
    t = 1.0
    best = None
    for it in range(1, max_iter + 1):
        a_new = project(yk - (Q @ yk + p) / L, z, C)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        # adaptive restart keeps the iteration monotone enough to converge linearly
        if (a_new - a) @ (yk - a_new) > 0:
            t_new = 1.0
            yk = a_new.copy()
        else:
            yk = a_new + (t - 1) / t_new * (a_new - a)
        a, t = a_new, t_new
        if it % polish_every == 0:
            for snap in (1e-9, 1e-6, 1e-4, 1e-2):
                x = _polish(a, Q, p, z, C, snap)
                if x is not None:
                    best = x
                    break
            if best is not None:
                break
    if best is None:
        best = a
    obj = -(0.5 * best @ Q @ best + p @ best)
    return best[:n], best[n:], float(obj)
