"""Price and volume feature sets F1..F8.

Price features are computed on the midprice:

* F1: EMAs for each half-life
* F2: simple moving averages then standard deviations, one per lag
* F3: current price, rolling maxima, rolling minima
* F4: counts of up ticks then down ticks over each lag

Volume features use the 6-vector of resting volume (bid levels 1..3 then ask
levels 1..3): the raw vector (F5), its L1-normalised form (F6), its first
difference (F7) and the normalised difference (F8).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .lob_data import SnapshotSeries

FEATURE_IDS = tuple(range(1, 9))
FEATURE_NAMES = {
    1: "ema",
    2: "bollinger",
    3: "donchian",
    4: "rsi_counts",
    5: "volume",
    6: "volume_share",
    7: "volume_change",
    8: "volume_change_share",
}


@dataclass(frozen=True)
class FeatureConfig:
    lags: tuple = (5, 10, 20, 50, 100)
    half_lives: tuple = (5, 10, 20, 50, 100)

    def __post_init__(self):
        lags = tuple(int(v) for v in self.lags)
        half_lives = tuple(float(v) for v in self.half_lives)
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "half_lives", half_lives)
        if not lags:
            raise ValueError("at least one lag is required")
        if len(half_lives) != len(lags):
            raise ValueError("half_lives and lags must have the same length")
        if lags[0] < 2:
            raise ValueError("lags must be >= 2 (standard deviation needs two points)")
        if any(b <= a for a, b in zip(lags, lags[1:])):
            raise ValueError("lags must be strictly increasing")
        if any(h < 1 for h in half_lives):
            raise ValueError("half_lives must be >= 1")

    @property
    def n(self) -> int:
        return len(self.lags)

    @property
    def warmup(self) -> int:
        """First index at which every feature is defined."""
        return max(max(self.lags), 1)


def feature_dimension(feature_id: int, config: FeatureConfig) -> int:
    n = config.n
    dims = {1: n, 2: 2 * n, 3: 2 * n + 1, 4: 2 * n}
    if feature_id in dims:
        return dims[feature_id]
    if feature_id in (5, 6, 7, 8):
        return 6
    raise ValueError(f"feature_id must be in 1..8, got {feature_id}")


@dataclass(frozen=True)
class FeatureVector:
    feature_id: int
    values: np.ndarray


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of one feature set, plus the column shift/scale applied to them (if any)."""

    feature_id: int
    values: np.ndarray
    mean: Optional[np.ndarray] = field(default=None)
    scale: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def ema(prices: Sequence[float], half_life: float) -> float:
    """Normalised exponentially weighted mean of the full history (oldest first).

    A sample ``half_life`` steps older than the newest carries half its weight.
    """
    p = np.asarray(prices, dtype=float)
    if p.size == 0:
        raise ValueError("ema of an empty sequence")
    if half_life < 1:
        raise ValueError("half_life must be >= 1")
    lam = 2.0 ** (-1.0 / half_life)
    weights = lam ** np.arange(p.size - 1, -1, -1, dtype=float)
    return float(weights @ p / weights.sum())


def ema_series(prices: np.ndarray, half_life: float) -> np.ndarray:
    """:func:`ema` evaluated at every prefix, by recursion. Causal."""
    p = np.asarray(prices, dtype=float)
    lam = 2.0 ** (-1.0 / half_life)
    num = lfilter([1.0], [1.0, -lam], p)
    den = lfilter([1.0], [1.0, -lam], np.ones_like(p))
    return num / den


@dataclass(frozen=True)
class RollingStats:
    ma: float
    std: float
    max: float
    min: float
    ups: int
    downs: int


def rolling_stats(prices: Sequence[float], lag: int) -> RollingStats:
    """Statistics over the last ``lag`` prices. Standard deviation uses divisor lag-1."""
    p = np.asarray(prices, dtype=float)
    if lag < 2:
        raise ValueError("lag must be >= 2")
    if p.size < lag:
        raise ValueError(f"window not warm: need {lag} prices, have {p.size}")
    w = p[-lag:]
    d = np.diff(w)
    return RollingStats(
        ma=float(w.mean()),
        std=float(w.std(ddof=1)),
        max=float(w.max()),
        min=float(w.min()),
        ups=int((d > 0).sum()),
        downs=int((d < 0).sum()),
    )


def _unit_l1(v: np.ndarray) -> np.ndarray:
    norm = np.abs(v).sum(axis=-1, keepdims=True)
    safe = np.where(norm > 0, norm, 1.0)
    return np.where(norm > 0, v / safe, 0.0)


def build_feature(series: SnapshotSeries, index: int, feature_id: int, config: FeatureConfig) -> FeatureVector:
    """Feature vector ``feature_id`` for the snapshot at ``index``, computed directly."""
    if feature_id not in FEATURE_IDS:
        raise ValueError(f"feature_id must be in 1..8, got {feature_id}")
    if not 0 <= index < len(series):
        raise IndexError(f"index {index} out of range")
    if index < config.warmup:
        raise ValueError(f"cold window: index {index} < warm-up {config.warmup}")

    mid = series.midprice[: index + 1]
    if feature_id == 1:
        values = [ema(mid, h) for h in config.half_lives]
    elif feature_id in (2, 3, 4):
        stats = [rolling_stats(mid, lag) for lag in config.lags]
        if feature_id == 2:
            values = [s.ma for s in stats] + [s.std for s in stats]
        elif feature_id == 3:
            values = [mid[-1]] + [s.max for s in stats] + [s.min for s in stats]
        else:
            values = [s.ups for s in stats] + [s.downs for s in stats]
    else:
        v = series.volumes[index]
        if feature_id == 5:
            values = v
        elif feature_id == 6:
            values = _unit_l1(v)
        else:
            dv = v - series.volumes[index - 1]
            values = dv if feature_id == 7 else _unit_l1(dv)
    return FeatureVector(feature_id, np.asarray(values, dtype=float))


def feature_table(series: SnapshotSeries, feature_id: int, config: FeatureConfig) -> np.ndarray:
    """Vectorised features for every index; rows before the warm-up are NaN.

    Every row depends only on snapshots at or before its own index.
    """
    n = len(series)
    dim = feature_dimension(feature_id, config)
    out = np.full((n, dim), np.nan)
    start = config.warmup
    if n <= start:
        return out
    mid = series.midprice

    if feature_id == 1:
        for k, h in enumerate(config.half_lives):
            out[:, k] = ema_series(mid, h)
    elif feature_id in (2, 3, 4):
        N = config.n
        if feature_id == 3:
            out[:, 0] = mid
        up = np.concatenate([[0], np.cumsum(np.diff(mid) > 0)])
        down = np.concatenate([[0], np.cumsum(np.diff(mid) < 0)])
        for k, lag in enumerate(config.lags):
            if n < lag:
                continue
            win = sliding_window_view(mid, lag)  # row r covers [r, r+lag)
            rows = slice(lag - 1, n)
            if feature_id == 2:
                out[rows, k] = win.mean(axis=1)
                out[rows, N + k] = win.std(axis=1, ddof=1)
            elif feature_id == 3:
                out[rows, 1 + k] = win.max(axis=1)
                out[rows, 1 + N + k] = win.min(axis=1)
            else:
                out[rows, k] = up[lag - 1:] - up[: n - lag + 1]
                out[rows, N + k] = down[lag - 1:] - down[: n - lag + 1]
    else:
        v = series.volumes
        if feature_id == 5:
            out[:] = v
        elif feature_id == 6:
            out[:] = _unit_l1(v)
        else:
            dv = np.full_like(v, np.nan)
            dv[1:] = v[1:] - v[:-1]
            out[:] = dv if feature_id == 7 else _unit_l1(dv)
    out[:start] = np.nan
    return out


def feature_matrix(series: SnapshotSeries, indices, feature_id: int, config: FeatureConfig) -> FeatureMatrix:
    """Stack feature rows for ``indices``; raises on cold indices."""
    idx = np.asarray(indices, dtype=int)
    if idx.size and idx.min() < config.warmup:
        raise ValueError(f"cold window: index {idx.min()} < warm-up {config.warmup}")
    return FeatureMatrix(feature_id, feature_table(series, feature_id, config)[idx])


def _zero_variance(std: np.ndarray, mean: np.ndarray) -> np.ndarray:
    return ~(std > 1e-12 * (1.0 + np.abs(mean)))


def standardize(train: FeatureMatrix, test: FeatureMatrix) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Shift/scale both matrices by the train columns' mean and sample std.

    Zero-variance columns are only shifted.
    """
    if len(train) == 0:
        raise ValueError("cannot standardize with an empty train matrix")
    if train.dim != test.dim:
        raise ValueError(f"dimension mismatch: train {train.dim} vs test {test.dim}")
    mean = train.values.mean(axis=0)
    if len(train) > 1:
        std = train.values.std(axis=0, ddof=1)
    else:
        std = np.zeros_like(mean)
    scale = np.where(_zero_variance(std, mean), 1.0, std)
    return (
        FeatureMatrix(train.feature_id, (train.values - mean) / scale, mean, scale),
        FeatureMatrix(test.feature_id, (test.values - mean) / scale, mean, scale),
    )
