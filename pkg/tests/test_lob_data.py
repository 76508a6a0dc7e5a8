import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mklob.lob_data import (
    BookValidationError, OrderBookSnapshot, ParseError, SnapshotSeries, SynthConfig,
    format_snapshots, generate_synthetic, horizon_indices, parse_snapshots, read_csv,
    snapshot_at_horizon, snapshot_index_at_horizon, write_csv,
)

ROW = "1000,1.4999,1.4998,1.4997,1.5000,1.5001,1.5002,5,3,2,4,6,1"


def _series(timestamps):
    n = len(timestamps)
    bids = np.tile([1.0, 0.9, 0.8], (n, 1))
    asks = np.tile([1.1, 1.2, 1.3], (n, 1))
    return SnapshotSeries(timestamps, bids, asks, np.ones((n, 6)))


def test_single_row():
    s = parse_snapshots(ROW)
    assert len(s) == 1
    assert s[0].best_bid == 1.4999
    assert s[0].best_ask == 1.5000
    assert s[0].volumes.tolist() == [5, 3, 2, 4, 6, 1]


def test_empty_input():
    assert len(parse_snapshots("")) == 0


def test_header_and_blank_lines():
    text = "timestamp_ms,bid1,bid2,bid3,ask1,ask2,ask3,bidvol1,bidvol2,bidvol3,askvol1,askvol2,askvol3\n\n" + ROW + "\n"
    assert len(parse_snapshots(io.StringIO(text))) == 1


def test_crossed_book_reports_line():
    bad = "1000,1.5001,1.4998,1.4997,1.5000,1.5001,1.5002,5,3,2,4,6,1"
    with pytest.raises(BookValidationError) as err:
        parse_snapshots(ROW + "\n" + bad.replace("1000", "2000", 1))
    assert err.value.line == 2


def test_wrong_column_count():
    with pytest.raises(ParseError) as err:
        parse_snapshots(ROW + "\n2000,1,2,3")
    assert err.value.line == 2


def test_non_numeric():
    with pytest.raises(ParseError):
        parse_snapshots(ROW.replace("1.5001", "abc"))


def test_non_increasing_timestamps():
    with pytest.raises(BookValidationError):
        parse_snapshots(ROW + "\n" + ROW)


def test_snapshot_rejects_negative_volume():
    with pytest.raises(BookValidationError):
        OrderBookSnapshot(0, (1.0, 0.9, 0.8), (1.1, 1.2, 1.3), (1, -1, 1), (1, 1, 1))


def test_generate_deterministic_and_valid():
    cfg = SynthConfig(n_snapshots=500, seed=3, drift_coupling=1.0)
    a, b = generate_synthetic(cfg), generate_synthetic(cfg)
    assert a == b
    assert len(a) == 500
    assert np.all(a.best_ask > a.best_bid)
    assert np.all(np.diff(a.timestamps) > 0)
    assert a.first_violation() is None


def test_generator_prices_on_tick_grid():
    s = generate_synthetic(SynthConfig(n_snapshots=300, seed=1))
    ticks = (s.bid_prices - 1.5) / 1e-4
    assert np.allclose(ticks, np.rint(ticks), atol=1e-6)


def test_generator_coupling_moves_with_imbalance():
    s = generate_synthetic(SynthConfig(n_snapshots=20000, seed=5, drift_coupling=1.0))
    v = s.volumes
    imb = (v[:, :3].sum(1) - v[:, 3:].sum(1)) / v.sum(1)
    step = np.diff(s.best_bid)
    assert np.corrcoef(imb[:-1], step)[0, 1] > 0.2
    s0 = generate_synthetic(SynthConfig(n_snapshots=20000, seed=5, drift_coupling=0.0))
    v0 = s0.volumes
    imb0 = (v0[:, :3].sum(1) - v0[:, 3:].sum(1)) / v0.sum(1)
    assert abs(np.corrcoef(imb0[:-1], np.diff(s0.best_bid))[0, 1]) < 0.05


@pytest.mark.parametrize("bad", [dict(n_snapshots=0), dict(mean_inter_arrival=0), dict(tick_size=-1)])
def test_synth_config_invariants(bad):
    with pytest.raises(ValueError):
        SynthConfig(**bad)


def test_horizon_examples():
    s = _series([0, 4000, 6000])
    assert snapshot_index_at_horizon(s, 0, 5) == 2
    assert snapshot_at_horizon(s, 2, 5) is None
    assert snapshot_index_at_horizon(s, 1, 0) == 1
    with pytest.raises(IndexError):
        snapshot_at_horizon(s, 3, 5)
    assert horizon_indices(s, 5).tolist() == [2, -1, -1]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 5000), min_size=1, max_size=30), st.floats(0, 20), st.floats(0, 20))
def test_horizon_monotone(gaps, d1, d2):
    s = _series(np.cumsum(gaps))
    lo, hi = sorted((d1, d2))
    for i in range(len(s)):
        a = snapshot_index_at_horizon(s, i, lo)
        b = snapshot_index_at_horizon(s, i, hi)
        if a is None:
            assert b is None
        elif b is not None:
            assert b >= a


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 80), st.integers(0, 10_000), st.floats(0, 3))
def test_round_trip(n, seed, coupling):
    s = generate_synthetic(SynthConfig(n_snapshots=n, seed=seed, drift_coupling=coupling))
    back = parse_snapshots(format_snapshots(s))
    assert back == s
    assert parse_snapshots(format_snapshots(s, header=False)) == s


def test_file_round_trip(tmp_path):
    s = generate_synthetic(SynthConfig(n_snapshots=50, seed=2))
    p = tmp_path / "book.csv"
    write_csv(s, p)
    assert read_csv(p) == s


def test_series_is_read_only():
    s = generate_synthetic(SynthConfig(n_snapshots=10))
    with pytest.raises(ValueError):
        s.volumes[0, 0] = 3.0
