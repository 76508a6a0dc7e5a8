"""Independent reference implementations used only by the tests."""

from math import comb

import numpy as np


def project_box_hyperplane(v, y, C):
    """Euclidean projection of v onto {0 <= a <= C, y.a = 0}.

    With a(nu) = clip(v - nu*y, 0, C), y.a(nu) is piecewise linear and
    non-increasing in nu, so the root is found exactly between breakpoints.
    """
    knots = np.unique(np.concatenate([v * y, (v - C) * y]))
    vals = (np.clip(v[None, :] - knots[:, None] * y[None, :], 0.0, C) * y).sum(axis=1)
    k = int(np.searchsorted(-vals, 0.0, side="left"))
    if k == 0:
        nu = knots[0]
    elif k == knots.size:
        nu = knots[-1]
    else:
        n0, n1, r0, r1 = knots[k - 1], knots[k], vals[k - 1], vals[k]
        nu = n1 if r0 == r1 else n0 + (n1 - n0) * r0 / (r0 - r1)
    return np.clip(v - nu * y, 0.0, C)


def svm_dual(K, y, a):
    v = a * y
    return a.sum() - 0.5 * v @ K @ v


def kkt_gap(K, y, a, C, eps=1e-9):
    """Largest violation m - M of the dual optimality conditions (<= 0 at optimum)."""
    g = 1.0 - y * (K @ (a * y))
    yg = y * g
    up = ((y > 0) & (a < C - eps)) | ((y < 0) & (a > eps))
    low = ((y > 0) & (a > eps)) | ((y < 0) & (a < C - eps))
    return float(yg[up].max() - yg[low].min())


def _polish(Q, y, a, C):
    """Fix the variables of ``a`` at a bound and solve for the free ones exactly."""
    n = y.size
    eps = 1e-6 * C
    free = (a > eps) & (a < C - eps)
    F = np.flatnonzero(free)
    X = np.flatnonzero(~free)
    af = np.where(a[X] > C / 2, C, 0.0)
    m = F.size
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = Q[np.ix_(F, F)]
    A[:m, m] = y[F]
    A[m, :m] = y[F]
    rhs = np.concatenate([1.0 - Q[np.ix_(F, X)] @ af, [-(y[X] @ af)]])
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    cand = np.empty(n)
    cand[F] = sol[:m]
    cand[X] = af
    if np.all(cand >= -1e-12) and np.all(cand <= C + 1e-12) and abs(y @ cand) < 1e-10 * max(1, C):
        return np.clip(cand, 0.0, C)
    return None


def qp_oracle(K, y, C, max_iterations=50000, chunk=100):
    """Maximise the SVM dual by accelerated projected gradient with polishing.

    Every ``chunk`` iterations the bound variables are fixed and the free ones
    solved exactly; the first polished point meeting the optimality conditions
    to 1e-9 is returned, otherwise the last projected-gradient iterate.
    """
    K = np.asarray(K, float)
    y = np.asarray(y, float)
    Q = (y[:, None] * y[None, :]) * K
    L = max(np.linalg.eigvalsh(Q).max(), 1e-12)
    a = np.zeros(y.size)
    z = a.copy()
    t = 1.0
    for it in range(1, max_iterations + 1):
        a_new = project_box_hyperplane(z + (1.0 - Q @ z) / L, y, C)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        if svm_dual(K, y, a_new) < svm_dual(K, y, a):
            z, t_new = a_new.copy(), 1.0  # adaptive restart
        else:
            z = a_new + ((t - 1) / t_new) * (a_new - a)
        a, t = a_new, t_new
        if it % chunk == 0:
            cand = _polish(Q, y, a, C)
            if cand is not None and kkt_gap(K, y, cand, C) <= 1e-9:
                return svm_dual(K, y, cand), cand
    return svm_dual(K, y, a), a


def binomial_exceed_probability(k, p, threshold):
    """P(X > threshold) for X ~ Binomial(k, p), summed exactly."""
    return sum(comb(k, j) * p**j * (1 - p) ** (k - j) for j in range(threshold + 1, k + 1))


def brute_force_ema(prices, half_life):
    lam = 2.0 ** (-1.0 / half_life)
    p = np.asarray(prices, float)[::-1]
    w = lam ** np.arange(p.size)
    return float((w * p).sum() / w.sum())
