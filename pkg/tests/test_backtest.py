import numpy as np
import pytest

from mklob.backtest import (
    N_COMBINATIONS, BacktestConfig, BacktestReport, HorizonResult, WindowRecord,
    attach_significance, combination_index, combination_label, cross_validate_kernels,
    run_backtest, weight_heatmap, window_bounds,
)
from mklob.features import FeatureConfig
from mklob.lob_data import SynthConfig, generate_synthetic

SMALL = FeatureConfig(lags=(3, 6), half_lives=(3, 6))


@pytest.fixture(scope="module")
def series():
    return generate_synthetic(SynthConfig(n_snapshots=200, seed=3, drift_coupling=1.0))


@pytest.fixture(scope="module")
def mkl_report(series):
    cfg = BacktestConfig(train_size=40, test_size=40, horizons=(10, 60), feature_config=SMALL)
    return run_backtest(series, cfg)


def test_combination_indexing():
    assert combination_index(1, 1) == 0
    assert combination_index(8, 16) == 127
    assert combination_label(combination_index(6, 16)) == "F6K16"
    with pytest.raises(ValueError):
        combination_index(9, 1)


@pytest.mark.parametrize("kwargs", [
    dict(train_size=1), dict(test_size=0), dict(horizons=(5, -1)), dict(model="svm"), dict(model=(9, 1)), dict(c=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        BacktestConfig(**kwargs)


def test_window_arithmetic():
    cfg = BacktestConfig()
    warm = cfg.feature_config.warmup
    bounds = window_bounds(warm + 300, cfg)
    assert bounds == [(warm, warm + 100, warm + 200), (warm + 100, warm + 200, warm + 300)]
    assert len(window_bounds(warm + 399, cfg)) == 2


def test_too_short_names_minimum(series):
    cfg = BacktestConfig()
    with pytest.raises(ValueError, match="300"):
        run_backtest(series.slice(0, 50), cfg)


def test_counts_add_up(mkl_report):
    for r in mkl_report.results:
        n_test = sum(w.test_stop - w.test_start for w in r.windows)
        assert r.possible + r.abstained + r.dropped == n_test
        assert r.correct <= r.possible <= r.total
        assert 0 <= r.possible_pct <= 100
        assert r.accuracy_pct is None or 0 <= r.accuracy_pct <= 100


def test_longer_horizon_drops_more(mkl_report):
    a, b = mkl_report.results
    assert b.dropped >= a.dropped
    assert b.total <= a.total


def test_mkl_weights_on_simplex(mkl_report):
    for r in mkl_report.results:
        stack = r.weight_stack()
        assert stack.shape[1:] == (3, N_COMBINATIONS)
        assert np.all(stack >= 0)
        assert np.allclose(stack.sum(axis=2), 1, atol=1e-9)
    grid = weight_heatmap([mkl_report])
    assert grid.shape == (N_COMBINATIONS, 2)
    assert np.allclose(grid.sum(axis=0), 1, atol=1e-6)


def test_single_kernel_mode(series):
    cfg = BacktestConfig(train_size=40, test_size=40, horizons=(10,), model=(5, 16), feature_config=SMALL)
    rep = run_backtest(series, cfg)
    r = rep.results[0]
    assert r.weight_stack() is None
    assert all(w.weights is None for w in r.windows)
    assert 0 <= r.possible_pct <= 100
    with pytest.raises(ValueError):
        weight_heatmap([rep])


def test_deterministic(series):
    cfg = BacktestConfig(train_size=40, test_size=40, horizons=(10,), model=(6, 1), feature_config=SMALL)
    a, b = run_backtest(series, cfg), run_backtest(series, cfg)
    for wa, wb in zip(a.results[0].windows, b.results[0].windows):
        assert np.array_equal(wa.predictions, wb.predictions)


def test_purge_excludes_labels_reaching_into_test(series):
    cfg = BacktestConfig(train_size=40, test_size=40, horizons=(60,), model=(5, 16), feature_config=SMALL)
    purged = run_backtest(series, cfg).results[0]
    loose = run_backtest(series, BacktestConfig(**{**cfg.__dict__, "purge_labels": False})).results[0]
    assert all(p.n_train_labeled <= q.n_train_labeled for p, q in zip(purged.windows, loose.windows))
    assert any(p.n_train_labeled < q.n_train_labeled for p, q in zip(purged.windows, loose.windows))


def test_significance_attached(mkl_report):
    attach_significance(mkl_report, iterations=500, seed=1)
    for r in mkl_report.results:
        assert 0 <= r.p_value <= 1
        assert r.p_value_iterations == 500


def _record(weights):
    n = 4
    return WindowRecord(0, 0, 10, 14, np.zeros(n, int), np.ones(n, bool), np.zeros(n, int),
                        np.array([1.0, 0, 0]), 10, weights)


def _report_with(weight_list):
    cfg = BacktestConfig(horizons=(5,))
    return BacktestReport(cfg, [HorizonResult(5, [_record(w) for w in weight_list])])


def test_heatmap_examples():
    e = np.eye(N_COMBINATIONS)
    grid = weight_heatmap([_report_with([np.tile(e[6], (3, 1))])])
    assert np.array_equal(grid[:, 0], e[6])
    grid = weight_heatmap([_report_with([np.tile(e[0], (3, 1)), np.tile(e[1], (3, 1))])])
    assert grid[0, 0] == 0.5 and grid[1, 0] == 0.5 and grid[:, 0].sum() == 1
    with pytest.raises(ValueError):
        weight_heatmap([])


def test_cross_validation_ranking():
    s = generate_synthetic(SynthConfig(n_snapshots=500, seed=2, drift_coupling=1.0))
    cfg = BacktestConfig(horizons=(10,), feature_config=SMALL)
    ranking = cross_validate_kernels(s, cfg, folds=3, limit=240)
    assert len(ranking) == N_COMBINATIONS
    assert len({(f, k) for f, k, _ in ranking}) == N_COMBINATIONS
    accs = [a for _, _, a in ranking]
    assert accs == sorted(accs, reverse=True)
    # the generator's direct signal sits in the volume features
    assert ranking[0][0] in (5, 6, 7, 8)
    assert cross_validate_kernels(s, cfg, folds=3, limit=240) == ranking
    with pytest.raises(ValueError):
        cross_validate_kernels(s, cfg, folds=1)
    with pytest.raises(ValueError):
        cross_validate_kernels(s.slice(0, 20), cfg, folds=10)
