"""Soft-margin SVM dual solver on a precomputed Gram matrix.

Solves::

    max_a  sum(a) - 1/2 (a*y)^T K (a*y)   s.t.  0 <= a <= C,  y^T a = 0

by two-coordinate working-set ascent (maximal violating pair with
second-order choice of the partner), stopping when the KKT gap
``max_{I_up} -y g - min_{I_low} -y g`` falls below the tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

TAU = 1e-12


@dataclass(frozen=True)
class SVMProblem:
    gram: np.ndarray
    labels: np.ndarray
    c: float = 1.0

    def __post_init__(self):
        K = np.asarray(getattr(self.gram, "values", self.gram), dtype=float)
        y = np.asarray(self.labels, dtype=float).ravel()
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"gram must be square, got shape {K.shape}")
        if K.shape[0] != y.size:
            raise ValueError(f"gram has {K.shape[0]} rows but there are {y.size} labels")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must all be +1 or -1")
        if not self.c > 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "gram", K)
        object.__setattr__(self, "labels", y)


@dataclass(frozen=True)
class SVMModel:
    alphas: np.ndarray
    bias: float
    support_indices: np.ndarray
    c: float
    objective: float
    kkt_violation: float
    iterations: int = 0
    converged: bool = True


@numba.njit(cache=True)
def _smo(K, y, C, alpha, grad, tol, max_iter):
    n = y.shape[0]
    it = 0
    nonpsd = False
    gap = np.inf
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v > gmax:
                    gmax = v
                    i = t
        if i < 0:
            gap = 0.0
            break
        gmin = np.inf
        j = -1
        best = np.inf
        Kii = K[i, i]
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = -y[t] * grad[t]
                if v < gmin:
                    gmin = v
                b = gmax - v
                if b > 0:
                    a = Kii + K[t, t] - 2.0 * K[i, t]
                    if a <= 0:
                        a = TAU
                    score = -b * b / a
                    if score < best:
                        best = score
                        j = t
        gap = gmax - gmin
        if gap <= tol or j < 0:
            break

        a = Kii + K[j, j] - 2.0 * K[i, j]
        if a <= 0:
            if a < -1e-10 * (abs(Kii) + abs(K[j, j]) + 1.0):
                nonpsd = True
            a = TAU
        step = (gmax + y[j] * grad[j]) / a
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, lim_i, lim_j)
        hit_i = step == lim_i
        hit_j = step == lim_j
        di = y[i] * step
        dj = -y[j] * step
        alpha[i] += di
        alpha[j] += dj
        if hit_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if hit_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        ci = y[i] * di
        cj = y[j] * dj
        for k in range(n):
            grad[k] += y[k] * (K[k, i] * ci + K[k, j] * cj)
        it += 1
    return it, gap, nonpsd


def dual_objective(gram: np.ndarray, labels: np.ndarray, alphas: np.ndarray) -> float:
    v = alphas * labels
    return float(alphas.sum() - 0.5 * v @ gram @ v)


def _kkt_bounds(y, alpha, grad, C):
    r = -y * grad
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    m = r[up].max() if up.any() else -np.inf
    M = r[low].min() if low.any() else np.inf
    return r, m, M


def train_svm(
    problem: SVMProblem,
    tolerance: float = 1e-4,
    alpha0: Optional[np.ndarray] = None,
    max_iter: int = 10_000_000,
) -> SVMModel:
    """Train the binary SVM on ``problem``.

    ``alpha0`` warm-starts the solver; it must be feasible for the same labels
    and C (any previous solution on the same labels is).
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    K, y, C = problem.gram, problem.labels, float(problem.c)
    n = y.size
    threshold = 1e-8 * C

    if np.all(y == y[0]):
        return SVMModel(
            alphas=np.zeros(n), bias=float(y[0]), support_indices=np.empty(0, dtype=int),
            c=C, objective=0.0, kkt_violation=0.0,
        )

    if alpha0 is None:
        alpha = np.zeros(n)
        grad = -np.ones(n)
    else:
        alpha = np.clip(np.asarray(alpha0, dtype=float).copy(), 0.0, C)
        grad = y * (K @ (alpha * y)) - 1.0
    Kc = np.ascontiguousarray(K)

    iterations = 0
    for _ in range(5):
        it, gap, nonpsd = _smo(Kc, y, C, alpha, grad, tolerance, max_iter - iterations)
        iterations += it
        if nonpsd:
            warnings.warn("Gram matrix is not positive semidefinite; step sizes clipped", RuntimeWarning)
        # refresh the accumulated gradient and confirm the stopping test
        grad = y * (Kc @ (alpha * y)) - 1.0
        r, m, M = _kkt_bounds(y, alpha, grad, C)
        if m - M <= tolerance or iterations >= max_iter:
            break

    r, m, M = _kkt_bounds(y, alpha, grad, C)
    violation = max(0.0, float(m - M))
    free = (alpha > threshold) & (alpha < C - threshold)
    if free.any():
        bias = float(np.median(r[free]))
    else:
        bias = float(0.5 * (m + M))
    return SVMModel(
        alphas=alpha,
        bias=bias,
        support_indices=np.flatnonzero(alpha > threshold),
        c=C,
        objective=dual_objective(Kc, y, alpha),
        kkt_violation=violation,
        iterations=iterations,
        converged=violation <= tolerance,
    )


def decision_values(model: SVMModel, labels: np.ndarray, cross_gram) -> np.ndarray:
    """``f(x) = sum_j a_j y_j K(x_j, x) + b`` for each row of ``cross_gram`` (test x train)."""
    K = np.atleast_2d(np.asarray(getattr(cross_gram, "values", cross_gram), dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if K.shape[1] != model.alphas.size or y.size != model.alphas.size:
        raise ValueError(
            f"cross gram has {K.shape[1]} columns, model has {model.alphas.size} coefficients"
        )
    return K @ (model.alphas * y) + model.bias
