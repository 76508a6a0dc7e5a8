"""SimpleMKL: kernel weights on the simplex by reduced-gradient descent.

The objective is ``J(d)``, the optimal SVM dual value for the combined kernel
``sum_m d_m K_m``. At the SVM solution ``a`` its gradient is
``dJ/dd_m = -1/2 (a*y)^T K_m (a*y)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .kernels import GramMatrix
from .svm import SVMModel, SVMProblem, train_svm

log = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) + 1.0) / 2.0


def _stack(grams) -> np.ndarray:
    if isinstance(grams, np.ndarray) and grams.ndim == 3:
        return np.ascontiguousarray(grams, dtype=float)
    return np.stack([np.asarray(getattr(g, "values", g), dtype=float) for g in grams])


@dataclass(frozen=True)
class MKLProblem:
    grams: np.ndarray
    labels: np.ndarray
    c: float = 1.0
    weight_tolerance: float = 1e-6
    gap_tolerance: float = 1e-3
    max_outer_iterations: int = 200
    svm_tolerance: float = 1e-4
    line_search_precision: float = 1e-2

    def __post_init__(self):
        G = _stack(self.grams)
        y = np.asarray(self.labels, dtype=float).ravel()
        if G.shape[0] < 1:
            raise ValueError("need at least one Gram matrix")
        if G.shape[1] != G.shape[2] or G.shape[1] != y.size:
            raise ValueError(f"grams of shape {G.shape[1:]} do not match {y.size} labels")
        if not self.c > 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "grams", G)
        object.__setattr__(self, "labels", y)

    @property
    def n_kernels(self) -> int:
        return self.grams.shape[0]


@dataclass(frozen=True)
class MKLModel:
    weights: np.ndarray
    inner: SVMModel
    objective: float
    duality_gap: float
    converged: bool
    iterations: int
    history: tuple = field(default=())


def _check_simplex(weights: np.ndarray, atol: float = 1e-9) -> None:
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > atol:
        raise ValueError("weights must lie on the simplex")


def combine_grams(grams, weights: Sequence[float]) -> GramMatrix:
    """Entrywise ``sum_m d_m K_m``; kernels with exactly zero weight are skipped."""
    G = _stack(grams)
    d = np.asarray(weights, dtype=float).ravel()
    if d.size != G.shape[0]:
        raise ValueError(f"{d.size} weights for {G.shape[0]} Gram matrices")
    _check_simplex(d)
    return GramMatrix(_combine(G, d))


def _combine(G: np.ndarray, d: np.ndarray) -> np.ndarray:
    M, n, m = G.shape
    nz = np.flatnonzero(d)
    if nz.size == 1:
        k = nz[0]
        return G[k] if d[k] == 1.0 else d[k] * G[k]
    if 4 * nz.size < M:
        return np.tensordot(d[nz], G[nz], axes=1)
    # dense product; zero weights contribute exact zeros
    return (d @ G.reshape(M, n * m)).reshape(n, m)


def quadratic_terms(G: np.ndarray, labels: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """``S_m = 1/2 (a*y)^T K_m (a*y)`` for every kernel."""
    v = alphas * labels
    M, n, _ = G.shape
    return 0.5 * (G.reshape(M, n * n) @ np.outer(v, v).ravel())


def _solve(problem: MKLProblem, d: np.ndarray, tolerance: float, alpha0=None) -> SVMModel:
    K = _combine(problem.grams, d)
    return train_svm(SVMProblem(K, problem.labels, problem.c), tolerance=tolerance, alpha0=alpha0)


def objective_and_gradient(
    problem: MKLProblem, weights, tolerance: float = 1e-4, alpha0: Optional[np.ndarray] = None
) -> tuple[float, np.ndarray, SVMModel]:
    """Optimal dual value ``J(d)``, its gradient in ``d`` and the inner SVM."""
    d = np.asarray(weights, dtype=float).ravel()
    if d.size != problem.n_kernels:
        raise ValueError(f"{d.size} weights for {problem.n_kernels} kernels")
    _check_simplex(d)
    inner = _solve(problem, d, tolerance, alpha0)
    grad = -quadratic_terms(problem.grams, problem.labels, inner.alphas)
    return inner.objective, grad, inner


def relative_gap(S: np.ndarray, d: np.ndarray, J: float) -> float:
    return float((S.max() - d @ S) / max(1.0, J))


def descent_direction(d: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Reduced-gradient descent direction with the largest weight as pivot."""
    mu = int(np.argmax(d))
    reduced = grad - grad[mu]
    D = -reduced
    D[(d <= 0) & (reduced > 0)] = 0.0
    D[mu] = 0.0
    D[mu] = -D.sum()
    return D


def _renormalise(d: np.ndarray) -> np.ndarray:
    d = np.maximum(d, 0.0)
    return d / d.sum()


def train_simplemkl(problem: MKLProblem) -> MKLModel:
    """Minimise ``J(d)`` over the simplex, starting from uniform weights."""
    M = problem.n_kernels
    tol = problem.svm_tolerance
    d = np.full(M, 1.0 / M)
    J, grad, inner = objective_and_gradient(problem, d, tol)
    history = [J]
    if M == 1:
        return MKLModel(np.ones(1), inner, J, 0.0, True, 0, tuple(history))

    gap = relative_gap(-grad, d, J)
    converged = gap <= problem.gap_tolerance
    iteration = 0
    while not converged and iteration < problem.max_outer_iterations:
        iteration += 1
        D = descent_direction(d, grad)
        if not np.any(D):
            break
        d_old = d
        cost, model = J, inner
        mu = int(np.argmax(d))

        # take full steps to the boundary while they keep decreasing J
        bracket = None
        while True:
            neg = D < 0
            if not neg.any():
                break
            ratios = -d[neg] / D[neg]
            step_max = float(ratios.min())
            hit = np.flatnonzero(neg)[np.argmin(ratios)]
            d_max = d + step_max * D
            d_max[hit] = 0.0
            d_max = _renormalise(d_max)
            model_max = _solve(problem, d_max, tol, model.alphas)
            if model_max.objective < cost and step_max > 0:
                d, cost, model = d_max, model_max.objective, model_max
                D = D.copy()
                D[(D <= 0) & (d <= 0)] = 0.0
                D[mu] = 0.0
                D[mu] = -D.sum()
                if not np.any(D):
                    break
            else:
                bracket = (step_max, d_max, model_max)
                break

        # golden-section search on [0, step_max] along the last direction
        if bracket is not None and bracket[0] > 0:
            step_max, d_max, model_max = bracket
            pts = {0.0: (cost, model, d), step_max: (model_max.objective, model_max, d_max)}
            lo, hi = 0.0, step_max
            while hi - lo > problem.line_search_precision * step_max:
                right = lo + (hi - lo) / GOLDEN
                left = lo + (right - lo) / GOLDEN
                for g in (left, right):
                    if g not in pts:
                        d_g = _renormalise(d + g * D)
                        m = _solve(problem, d_g, tol, model.alphas)
                        pts[g] = (m.objective, m, d_g)
                order = [lo, left, right, hi]
                best = min(range(4), key=lambda k: pts[order[k]][0])
                if best == 0:
                    hi = left
                elif best == 1:
                    hi = right
                elif best == 2:
                    lo = left
                else:
                    lo = right
            g_best = min(pts, key=lambda g: pts[g][0])
            if pts[g_best][0] < cost:
                cost, model, d = pts[g_best]

        J, inner = cost, model
        if history and J > history[-1]:
            raise AssertionError("SimpleMKL objective increased")
        history.append(J)
        grad = -quadratic_terms(problem.grams, problem.labels, inner.alphas)
        gap = relative_gap(-grad, d, J)
        log.debug("simplemkl iter %d J=%.10g gap=%.3g nnz=%d", iteration, J, gap, np.count_nonzero(d))
        if gap <= problem.gap_tolerance:
            converged = True
            break
        if np.max(np.abs(d - d_old)) < problem.weight_tolerance:
            break

    d = _renormalise(d)
    return MKLModel(
        weights=d,
        inner=inner,
        objective=J,
        duality_gap=gap,
        converged=bool(gap <= problem.gap_tolerance),
        iterations=iteration,
        history=tuple(history),
    )
