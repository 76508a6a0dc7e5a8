"""Monte Carlo p-values against class-proportion random guessing.

For every out-of-sample window a random class is drawn for each instance the
method actually predicted, with probabilities equal to that window's
in-sample class proportions. The p-value is the fraction of replays whose total
number of correct guesses strictly exceeds the method's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

BLOCK_ITERATIONS = 512


@dataclass(frozen=True)
class WindowBaseline:
    class_proportions: np.ndarray
    true_classes: np.ndarray
    possible_indices: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.class_proportions, dtype=float).ravel()
        t = np.asarray(self.true_classes, dtype=int).ravel()
        if p.size != 3:
            raise ValueError("class_proportions needs 3 entries (up, down, none)")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"class proportions must be nonnegative and sum to 1, got {p.tolist()}")
        idx = self.possible_indices
        idx = np.arange(t.size) if idx is None else np.asarray(idx, dtype=int).ravel()
        if idx.size != t.size:
            raise ValueError("possible_indices and true_classes must have equal length")
        object.__setattr__(self, "class_proportions", p)
        object.__setattr__(self, "true_classes", t)
        object.__setattr__(self, "possible_indices", idx)


@dataclass(frozen=True)
class SignificanceResult:
    p_value: float
    iterations: int
    exceed_count: int


def class_proportions(classes: np.ndarray) -> np.ndarray:
    """Share of up/down/none among classified instances (unclassified ones ignored)."""
    c = np.asarray(classes, dtype=int)
    counts = np.array([(c == k).sum() for k in range(3)], dtype=float)
    total = counts.sum()
    if total == 0:
        raise ValueError("no classified instances to take proportions from")
    return counts / total


def random_correct_counts(
    baselines: Sequence[WindowBaseline], iterations: int, seed: int
) -> np.ndarray:
    """Total correct random guesses across all windows, one entry per replay."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n_blocks = -(-iterations // BLOCK_ITERATIONS)
    block_seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    totals = np.zeros(iterations, dtype=np.int64)
    for b, ss in enumerate(block_seeds):
        rng = np.random.default_rng(ss)
        lo = b * BLOCK_ITERATIONS
        hi = min(iterations, lo + BLOCK_ITERATIONS)
        for w in baselines:
            if w.true_classes.size == 0:
                continue
            cdf = np.cumsum(w.class_proportions)
            cdf[-1] = 1.0
            u = rng.random((hi - lo, w.true_classes.size))
            drawn = np.searchsorted(cdf, u, side="right")
            totals[lo:hi] += (drawn == w.true_classes).sum(axis=1)
    return totals


def monte_carlo_pvalue(
    baselines: Sequence[WindowBaseline],
    method_correct_total: int,
    iterations: int = 100_000,
    seed: int = 0,
) -> SignificanceResult:
    total_possible = sum(w.true_classes.size for w in baselines)
    if method_correct_total > total_possible:
        raise ValueError(
            f"method_correct_total {method_correct_total} exceeds {total_possible} possible instances"
        )
    totals = random_correct_counts(baselines, iterations, seed)
    exceed = int((totals > method_correct_total).sum())
    return SignificanceResult(p_value=exceed / iterations, iterations=iterations, exceed_count=exceed)
