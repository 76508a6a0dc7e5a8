"""Order book snapshots: CSV ingestion, synthetic generation and horizon lookup.

A series is stored column-wise (numpy arrays) so that feature extraction can be
vectorised; individual rows are materialised as :class:`OrderBookSnapshot` on
access.

CSV layout, one snapshot per line, optional header, 13 columns::

    timestamp_ms,bid1,bid2,bid3,ask1,ask2,ask3,
    bidvol1,bidvol2,bidvol3,askvol1,askvol2,askvol3
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

LEVELS = 3

CSV_COLUMNS = (
    "timestamp_ms",
    "bid1", "bid2", "bid3",
    "ask1", "ask2", "ask3",
    "bidvol1", "bidvol2", "bidvol3",
    "askvol1", "askvol2", "askvol3",
)


class ParseError(ValueError):
    """Malformed CSV row."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class BookValidationError(ValueError):
    """A snapshot or series violates an order book invariant."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _check_book(bid_prices, ask_prices, bid_volumes, ask_volumes) -> Optional[str]:
    if not np.all(np.isfinite(bid_prices)) or not np.all(np.isfinite(ask_prices)):
        return "non-finite price"
    if np.any(bid_prices <= 0) or np.any(ask_prices <= 0):
        return "prices must be positive"
    if bid_prices[0] >= ask_prices[0]:
        return f"crossed book: best bid {bid_prices[0]} >= best ask {ask_prices[0]}"
    if np.any(np.diff(bid_prices) >= 0):
        return "bid prices must be strictly descending"
    if np.any(np.diff(ask_prices) <= 0):
        return "ask prices must be strictly ascending"
    if not np.all(np.isfinite(bid_volumes)) or not np.all(np.isfinite(ask_volumes)):
        return "non-finite volume"
    if np.any(bid_volumes < 0) or np.any(ask_volumes < 0):
        return "volumes must be nonnegative"
    return None


@dataclass(frozen=True)
class OrderBookSnapshot:
    """Three-level book at one instant. Level 1 is the top of book."""

    timestamp: int
    bid_prices: tuple
    ask_prices: tuple
    bid_volumes: tuple
    ask_volumes: tuple

    def __post_init__(self):
        for name in ("bid_prices", "ask_prices", "bid_volumes", "ask_volumes"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != LEVELS:
                raise BookValidationError(f"{name} needs {LEVELS} levels, got {len(value)}")
            object.__setattr__(self, name, value)
        problem = _check_book(
            np.asarray(self.bid_prices), np.asarray(self.ask_prices),
            np.asarray(self.bid_volumes), np.asarray(self.ask_volumes),
        )
        if problem:
            raise BookValidationError(problem)

    @property
    def best_bid(self) -> float:
        return self.bid_prices[0]

    @property
    def best_ask(self) -> float:
        return self.ask_prices[0]

    @property
    def midprice(self) -> float:
        return 0.5 * (self.best_bid + self.best_ask)

    @property
    def volumes(self) -> np.ndarray:
        """Volume vector: bid levels 1..3 then ask levels 1..3."""
        return np.array(self.bid_volumes + self.ask_volumes)


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    """Ordered, immutable sequence of snapshots with strictly increasing timestamps.

    Columns are exposed directly: ``timestamps`` (n,), ``bid_prices`` and
    ``ask_prices`` (n, 3), ``volumes`` (n, 6) ordered bid 1..3 then ask 1..3.
    """

    timestamps: np.ndarray
    bid_prices: np.ndarray
    ask_prices: np.ndarray
    volumes: np.ndarray
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
        n = ts.shape[0]
        arrays = {
            "timestamps": ts,
            "bid_prices": np.asarray(self.bid_prices, dtype=float).reshape(n, LEVELS),
            "ask_prices": np.asarray(self.ask_prices, dtype=float).reshape(n, LEVELS),
            "volumes": np.asarray(self.volumes, dtype=float).reshape(n, 2 * LEVELS),
        }
        for name, arr in arrays.items():
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self._validated:
            problem = self.first_violation()
            if problem is not None:
                row, message = problem
                raise BookValidationError(f"row {row}: {message}")

    @classmethod
    def from_snapshots(cls, snapshots: Iterable[OrderBookSnapshot]) -> "SnapshotSeries":
        snaps = list(snapshots)
        return cls(
            timestamps=np.array([s.timestamp for s in snaps], dtype=np.int64),
            bid_prices=np.array([s.bid_prices for s in snaps], dtype=float).reshape(-1, LEVELS),
            ask_prices=np.array([s.ask_prices for s in snaps], dtype=float).reshape(-1, LEVELS),
            volumes=np.array([s.bid_volumes + s.ask_volumes for s in snaps], dtype=float).reshape(
                -1, 2 * LEVELS
            ),
        )

    def first_violation(self) -> Optional[tuple[int, str]]:
        """Return (row, message) for the first invariant violation, or None."""
        bids, asks, vols = self.bid_prices, self.ask_prices, self.volumes
        bad = (
            ~np.isfinite(bids).all(axis=1)
            | ~np.isfinite(asks).all(axis=1)
            | ~np.isfinite(vols).all(axis=1)
            | (bids <= 0).any(axis=1)
            | (asks <= 0).any(axis=1)
            | (bids[:, 0] >= asks[:, 0])
            | (np.diff(bids, axis=1) >= 0).any(axis=1)
            | (np.diff(asks, axis=1) <= 0).any(axis=1)
            | (vols < 0).any(axis=1)
        )
        if bad.any():
            row = int(np.argmax(bad))
            return row, _check_book(bids[row], asks[row], vols[row, :LEVELS], vols[row, LEVELS:])
        steps = np.diff(self.timestamps)
        if (steps <= 0).any():
            row = int(np.argmax(steps <= 0)) + 1
            return row, "timestamps must be strictly increasing"
        return None

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    def __getitem__(self, index: int) -> OrderBookSnapshot:
        if not -len(self) <= index < len(self):
            raise IndexError(f"snapshot index {index} out of range for series of length {len(self)}")
        return OrderBookSnapshot(
            timestamp=int(self.timestamps[index]),
            bid_prices=tuple(self.bid_prices[index]),
            ask_prices=tuple(self.ask_prices[index]),
            bid_volumes=tuple(self.volumes[index, :LEVELS]),
            ask_volumes=tuple(self.volumes[index, LEVELS:]),
        )

    def __iter__(self) -> Iterator[OrderBookSnapshot]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SnapshotSeries):
            return NotImplemented
        return (
            np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.bid_prices, other.bid_prices)
            and np.array_equal(self.ask_prices, other.ask_prices)
            and np.array_equal(self.volumes, other.volumes)
        )

    @property
    def best_bid(self) -> np.ndarray:
        return self.bid_prices[:, 0]

    @property
    def best_ask(self) -> np.ndarray:
        return self.ask_prices[:, 0]

    @property
    def midprice(self) -> np.ndarray:
        return 0.5 * (self.bid_prices[:, 0] + self.ask_prices[:, 0])

    def slice(self, start: int, stop: int) -> "SnapshotSeries":
        return SnapshotSeries(
            self.timestamps[start:stop], self.bid_prices[start:stop],
            self.ask_prices[start:stop], self.volumes[start:stop], _validated=True,
        )


def _is_header(row: list[str]) -> bool:
    try:
        float(row[0])
    except ValueError:
        return True
    return False


def parse_snapshots(text: str | io.TextIOBase) -> SnapshotSeries:
    """Parse the 13-column CSV layout into a validated series.

    Errors carry the 1-based line number of the offending row.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = []
    last_ts = None
    for line_no, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if line_no == 1 and _is_header(row):
            continue
        if len(row) != len(CSV_COLUMNS):
            raise ParseError(line_no, f"expected {len(CSV_COLUMNS)} columns, got {len(row)}")
        try:
            ts = int(row[0])
            values = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise ParseError(line_no, f"non-numeric field ({exc})") from None
        arr = np.array(values)
        problem = _check_book(arr[0:3], arr[3:6], arr[6:9], arr[9:12])
        if problem:
            raise BookValidationError(problem, line=line_no)
        if last_ts is not None and ts <= last_ts:
            raise BookValidationError(
                f"timestamp {ts} not greater than previous {last_ts}", line=line_no
            )
        last_ts = ts
        rows.append((ts, arr))

    if not rows:
        return SnapshotSeries(
            np.empty(0, dtype=np.int64), np.empty((0, 3)), np.empty((0, 3)), np.empty((0, 6)),
            _validated=True,
        )
    ts = np.array([r[0] for r in rows], dtype=np.int64)
    data = np.vstack([r[1] for r in rows])
    return SnapshotSeries(ts, data[:, 0:3], data[:, 3:6], data[:, 6:12], _validated=True)


def format_snapshots(series: SnapshotSeries, header: bool = True) -> str:
    """Serialise a series to CSV. Floats use ``repr`` so parsing round-trips exactly."""
    out = io.StringIO()
    if header:
        out.write(",".join(CSV_COLUMNS) + "\n")
    for i in range(len(series)):
        fields = [str(int(series.timestamps[i]))]
        fields += [repr(float(v)) for v in series.bid_prices[i]]
        fields += [repr(float(v)) for v in series.ask_prices[i]]
        fields += [repr(float(v)) for v in series.volumes[i]]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def read_csv(path) -> SnapshotSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_snapshots(fh)


def write_csv(series: SnapshotSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_snapshots(series))


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic order book generator.

    The best bid follows a tick-quantised random walk. At each update it moves
    up with probability ``move_probability * (1 + drift_coupling * imb)`` and
    down with ``move_probability * (1 - drift_coupling * imb)``, where
    ``imb = (sum bid vol - sum ask vol) / (sum bid vol + sum ask vol)`` is the
    normalised volume imbalance of the previous snapshot. A move is
    ``1 + Geometric`` ticks long: it extends by another tick with probability
    ``jump_continuation``. Imbalance is driven by a persistent AR(1) factor, so
    it also carries information about the steps after the next one.
    """

    n_snapshots: int = 5000
    seed: int = 0
    mean_inter_arrival: float = 30_000.0
    tick_size: float = 1e-4
    base_price: float = 1.5
    drift_coupling: float = 0.0
    move_probability: float = 0.37
    jump_continuation: float = 0.7
    spread_ticks: int = 1
    mean_volume: float = 10.0
    imbalance_persistence: float = 0.7
    imbalance_scale: float = 1.5
    volume_noise: float = 0.3
    start_timestamp: int = 1_257_120_000_000

    def __post_init__(self):
        if self.n_snapshots <= 0:
            raise ValueError("n_snapshots must be positive")
        if self.mean_inter_arrival <= 0:
            raise ValueError("mean_inter_arrival must be positive")
        if self.tick_size <= 0:
            raise ValueError("tick_size must be positive")
        if self.base_price <= 0:
            raise ValueError("base_price must be positive")
        if not 0 < self.move_probability <= 0.5:
            raise ValueError("move_probability must lie in (0, 0.5]")
        if not 0 <= self.jump_continuation < 1:
            raise ValueError("jump_continuation must lie in [0, 1)")
        if self.spread_ticks < 1:
            raise ValueError("spread_ticks must be at least 1")
        if not 0 <= self.imbalance_persistence < 1:
            raise ValueError("imbalance_persistence must lie in [0, 1)")
        if self.mean_volume <= 0:
            raise ValueError("mean_volume must be positive")


def generate_synthetic(config: SynthConfig) -> SnapshotSeries:
    """Simulate a three-level book whose drift responds to volume imbalance."""
    rng = np.random.default_rng(config.seed)
    n = config.n_snapshots

    gaps = np.maximum(1, np.rint(rng.exponential(config.mean_inter_arrival, size=n))).astype(np.int64)
    gaps[0] = 0
    timestamps = config.start_timestamp + np.cumsum(gaps)

    # persistent imbalance factor; bid side scaled by exp(+z), ask side by exp(-z)
    phi = config.imbalance_persistence
    shocks = rng.standard_normal(n) * config.imbalance_scale * np.sqrt(1 - phi**2)
    z = np.empty(n)
    z[0] = rng.standard_normal() * config.imbalance_scale
    for t in range(1, n):
        z[t] = phi * z[t - 1] + shocks[t]
    level_noise = rng.standard_normal((n, 2 * LEVELS)) * config.volume_noise
    side = np.concatenate([np.ones(LEVELS), -np.ones(LEVELS)])
    volumes = np.maximum(1.0, np.rint(config.mean_volume * np.exp(z[:, None] * side + level_noise)))

    bid_total = volumes[:, :LEVELS].sum(axis=1)
    ask_total = volumes[:, LEVELS:].sum(axis=1)
    imbalance = (bid_total - ask_total) / (bid_total + ask_total)

    q = config.move_probability
    p_up = np.clip(q * (1 + config.drift_coupling * imbalance), 0.0, 2 * q)
    p_down = 2 * q - p_up
    u = rng.random(n)
    size = rng.geometric(1.0 - config.jump_continuation, size=n)
    moves = np.where(u < p_up, size, np.where(u < p_up + p_down, -size, 0))
    # the move into t is decided by the imbalance visible at t-1
    steps = np.zeros(n, dtype=np.int64)
    steps[1:] = moves[:-1]
    bid_ticks = np.cumsum(steps)
    # keep the walk away from zero price
    floor = int(np.ceil(-config.base_price / config.tick_size)) + 2 * LEVELS + 1
    bid_ticks = np.maximum(bid_ticks, floor)

    offsets = np.arange(LEVELS)
    tick = config.tick_size
    bid_ticks_lv = bid_ticks[:, None] - offsets
    ask_ticks_lv = bid_ticks[:, None] + config.spread_ticks + offsets
    bid_prices = np.round(config.base_price + bid_ticks_lv * tick, 10)
    ask_prices = np.round(config.base_price + ask_ticks_lv * tick, 10)
    return SnapshotSeries(timestamps, bid_prices, ask_prices, volumes)


def snapshot_index_at_horizon(series: SnapshotSeries, index: int, delta_t: float) -> Optional[int]:
    """Index of the first snapshot at or after ``timestamp[index] + delta_t`` seconds."""
    n = len(series)
    if not 0 <= index < n:
        raise IndexError(f"index {index} out of range for series of length {n}")
    target = series.timestamps[index] + delta_t * 1000.0
    pos = int(np.searchsorted(series.timestamps, target, side="left"))
    return pos if pos < n else None


def horizon_indices(series: SnapshotSeries, delta_t: float) -> np.ndarray:
    """Vectorised horizon lookup for every index; -1 where absent."""
    target = series.timestamps + delta_t * 1000.0
    pos = np.searchsorted(series.timestamps, target, side="left")
    return np.where(pos < len(series), pos, -1)


def snapshot_at_horizon(series: SnapshotSeries, index: int, delta_t: float) -> Optional[OrderBookSnapshot]:
    """First snapshot whose timestamp is >= the one at ``index`` plus ``delta_t`` seconds."""
    pos = snapshot_index_at_horizon(series, index, delta_t)
    return None if pos is None else series[pos]
