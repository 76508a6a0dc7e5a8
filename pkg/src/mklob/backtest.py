"""Rolling-window experiment, kernel ranking by cross-validation, weight heatmaps.

Windows are contiguous blocks of warm instances: the classifiers are trained on
``train_size`` instances and predict the following ``test_size``; the window
then rolls forward by ``test_size``.

Every input to a window's classifiers comes from data at or before the end of
its train block: feature rows are causal, standardisation and kernel widths use
train rows only, and (with ``purge_labels``) a train instance is only used if
its horizon snapshot also lies inside the train block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .features import FEATURE_IDS, FeatureConfig, FeatureMatrix, feature_table, standardize
from .kernels import (
    BANK_SIZE, NET_VARIANCES, POLY_DEGREES, RBF_MULTIPLIERS, default_kernel_bank, gram,
)
from .labeling import ABSTAIN, NO_CLASS, combine_sign_arrays, label_arrays, true_classes
from .lob_data import SnapshotSeries, horizon_indices
from .mkl import MKLProblem, train_simplemkl
from .significance import WindowBaseline, class_proportions, monte_carlo_pvalue
from .svm import SVMProblem, decision_values, train_svm

log = logging.getLogger(__name__)

N_COMBINATIONS = len(FEATURE_IDS) * BANK_SIZE
DEFAULT_HORIZONS = (5, 10, 20, 50, 100, 200)
MKL = "mkl"


def combination_index(feature_id: int, kernel_index: int) -> int:
    """0-based row of the (feature, kernel) pair among the 128 combinations."""
    if feature_id not in FEATURE_IDS or not 1 <= kernel_index <= BANK_SIZE:
        raise ValueError(f"no combination F{feature_id}K{kernel_index}")
    return (feature_id - 1) * BANK_SIZE + (kernel_index - 1)


def combination_label(m: int) -> str:
    return f"F{m // BANK_SIZE + 1}K{m % BANK_SIZE + 1}"


@dataclass(frozen=True)
class BacktestConfig:
    train_size: int = 100
    test_size: int = 100
    horizons: tuple = DEFAULT_HORIZONS
    model: Union[str, tuple] = MKL
    c: float = 1.0
    svm_tolerance: float = 1e-4
    gap_tolerance: float = 1e-3
    weight_tolerance: float = 1e-6
    max_outer_iterations: int = 200
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    rbf_multipliers: tuple = RBF_MULTIPLIERS
    poly_degrees: tuple = POLY_DEGREES
    net_variances: tuple = NET_VARIANCES
    normalize_kernels: bool = True
    purge_labels: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.train_size < 2:
            raise ValueError("train_size must be >= 2")
        if self.test_size < 1:
            raise ValueError("test_size must be >= 1")
        horizons = tuple(float(h) if not float(h).is_integer() else int(h) for h in self.horizons)
        if not horizons or any(h <= 0 for h in horizons):
            raise ValueError("horizons must be positive")
        object.__setattr__(self, "horizons", horizons)
        model = self.model
        if isinstance(model, str):
            if model != MKL:
                raise ValueError(f"model must be 'mkl' or a (feature_id, kernel_index) pair, got {model!r}")
        else:
            model = tuple(int(v) for v in model)
            if len(model) != 2:
                raise ValueError("single-kernel model must be a (feature_id, kernel_index) pair")
            combination_index(*model)
            object.__setattr__(self, "model", model)
        if not self.c > 0:
            raise ValueError("C must be positive")
        for name in ("rbf_multipliers", "poly_degrees", "net_variances"):
            values = tuple(getattr(self, name))
            if len(values) != 5 or any(not v > 0 for v in values):
                raise ValueError(f"{name} needs exactly 5 positive values")
            object.__setattr__(self, name, values)
        if any(int(d) != d for d in self.poly_degrees):
            raise ValueError("poly_degrees must be integers")

    @property
    def is_mkl(self) -> bool:
        return self.model == MKL

    @property
    def method_label(self) -> str:
        return "SimpleMKL" if self.is_mkl else f"F{self.model[0]}K{self.model[1]}"

    def minimum_rows(self) -> int:
        return self.feature_config.warmup + self.train_size + self.test_size


@dataclass
class WindowRecord:
    index: int
    train_start: int
    test_start: int
    test_stop: int
    predictions: np.ndarray
    labeled: np.ndarray
    true_classes: np.ndarray
    class_proportions: Optional[np.ndarray]
    n_train_labeled: int
    weights: Optional[np.ndarray] = None

    @property
    def possible_mask(self) -> np.ndarray:
        return self.labeled & (self.predictions != ABSTAIN)

    @property
    def possible(self) -> int:
        return int(self.possible_mask.sum())

    @property
    def correct(self) -> int:
        m = self.possible_mask
        return int((self.predictions[m] == self.true_classes[m]).sum())

    def baseline(self) -> Optional[WindowBaseline]:
        m = self.possible_mask
        if not m.any():
            return None
        return WindowBaseline(
            self.class_proportions, self.true_classes[m], np.flatnonzero(m) + self.test_start
        )


@dataclass
class HorizonResult:
    horizon: float
    windows: list
    p_value: Optional[float] = None
    p_value_iterations: Optional[int] = None
    p_value_exceed: Optional[int] = None

    @property
    def possible(self) -> int:
        return sum(w.possible for w in self.windows)

    @property
    def correct(self) -> int:
        return sum(w.correct for w in self.windows)

    @property
    def total(self) -> int:
        return sum(int(w.labeled.sum()) for w in self.windows)

    @property
    def dropped(self) -> int:
        return sum(int((~w.labeled).sum()) for w in self.windows)

    @property
    def abstained(self) -> int:
        return self.total - self.possible

    @property
    def possible_pct(self) -> float:
        return 100.0 * self.possible / self.total if self.total else 0.0

    @property
    def accuracy_pct(self) -> Optional[float]:
        return 100.0 * self.correct / self.possible if self.possible else None

    def counts(self) -> dict:
        return {
            "possible": self.possible,
            "correct": self.correct,
            "total": self.total,
            "abstained": self.abstained,
            "dropped": self.dropped,
        }

    def weight_stack(self) -> Optional[np.ndarray]:
        """(windows, 3, 128) array of the trained windows' weights, or None."""
        ws = [w.weights for w in self.windows if w.weights is not None]
        return np.stack(ws) if ws else None


@dataclass
class BacktestReport:
    config: BacktestConfig
    results: list

    @property
    def horizons(self) -> list:
        return [r.horizon for r in self.results]

    def result(self, horizon) -> HorizonResult:
        for r in self.results:
            if r.horizon == horizon:
                return r
        raise KeyError(f"no result for horizon {horizon}")


# --- per-window machinery -------------------------------------------------


def _feature_tables(series: SnapshotSeries, config: FeatureConfig, feature_ids) -> dict:
    return {f: feature_table(series, f, config) for f in feature_ids}


def _window_grams(tables: dict, train_idx, test_idx, config: BacktestConfig, combos) -> tuple:
    """Train and cross Gram stacks for the requested combination indices."""
    n_tr, n_te = len(train_idx), len(test_idx)
    G_train = np.empty((len(combos), n_tr, n_tr))
    G_cross = np.empty((len(combos), n_te, n_tr))
    by_feature: dict = {}
    for pos, m in enumerate(combos):
        by_feature.setdefault(m // BANK_SIZE + 1, []).append((pos, m % BANK_SIZE))
    for f, entries in by_feature.items():
        table = tables[f]
        tr, te = standardize(FeatureMatrix(f, table[train_idx]), FeatureMatrix(f, table[test_idx]))
        bank = default_kernel_bank(
            tr.values, config.rbf_multipliers, config.poly_degrees, config.net_variances
        )
        for pos, k in entries:
            spec = bank[k]
            Ktr = gram(tr.values, tr.values, spec).values
            Kte = gram(te.values, tr.values, spec).values
            if config.normalize_kernels:
                tr_mean = np.trace(Ktr) / n_tr
                if tr_mean > 0:
                    Ktr = Ktr / tr_mean
                    Kte = Kte / tr_mean
            G_train[pos] = Ktr
            G_cross[pos] = Kte
    return G_train, G_cross


def _fit_predict(G_train, G_cross, labels, config: BacktestConfig):
    """Train the three classifiers; return the (n_test, 3) signs and weights (3, M) or None."""
    signs = np.empty((G_cross.shape[1], 3))
    weights = np.empty((3, G_train.shape[0])) if config.is_mkl else None
    for c in range(3):
        y = labels[:, c].astype(float)
        if config.is_mkl:
            model = train_simplemkl(MKLProblem(
                G_train, y, config.c,
                weight_tolerance=config.weight_tolerance,
                gap_tolerance=config.gap_tolerance,
                max_outer_iterations=config.max_outer_iterations,
                svm_tolerance=config.svm_tolerance,
            ))
            d = model.weights
            nz = np.flatnonzero(d)
            cross = np.tensordot(d[nz], G_cross[nz], axes=1)
            f = decision_values(model.inner, y, cross)
            weights[c] = d
        else:
            model = train_svm(SVMProblem(G_train[0], y, config.c), tolerance=config.svm_tolerance)
            f = decision_values(model, y, G_cross[0])
        signs[:, c] = np.where(f > 0, 1, -1)
    return signs, weights


def window_bounds(n_rows: int, config: BacktestConfig) -> list:
    """(train_start, test_start, test_stop) series indices for every full window."""
    warm = config.feature_config.warmup
    n_inst = n_rows - warm
    if n_inst < config.train_size + config.test_size:
        raise ValueError(
            f"series too short: {n_rows} rows, need at least {config.minimum_rows()} "
            f"(warm-up {warm} + train {config.train_size} + test {config.test_size})"
        )
    n_windows = (n_inst - config.train_size) // config.test_size
    out = []
    for w in range(n_windows):
        test_start = warm + config.train_size + w * config.test_size
        out.append((test_start - config.train_size, test_start, test_start + config.test_size))
    return out


def run_window(series: SnapshotSeries, config: BacktestConfig, bounds, tables=None, horizon_idx=None) -> dict:
    """Evaluate one window at every configured horizon. Returns {horizon: WindowRecord}."""
    train_start, test_start, test_stop = bounds
    train_idx = np.arange(train_start, test_start)
    test_idx = np.arange(test_start, test_stop)
    combos = list(range(N_COMBINATIONS)) if config.is_mkl else [combination_index(*config.model)]
    if tables is None:
        tables = _feature_tables(series, config.feature_config, sorted({m // BANK_SIZE + 1 for m in combos}))
    G_train, G_cross = _window_grams(tables, train_idx, test_idx, config, combos)

    bid, ask = series.best_bid, series.best_ask
    records = {}
    for h in config.horizons:
        fut = horizon_idx[h] if horizon_idx is not None else horizon_indices(series, h)
        tr_fut = fut[train_idx]
        usable = tr_fut >= 0
        if config.purge_labels:
            usable &= tr_fut < test_start
        sel = np.flatnonzero(usable)
        tr_labels = label_arrays(bid[train_idx[sel]], ask[train_idx[sel]], bid[tr_fut[sel]], ask[tr_fut[sel]])

        te_fut = fut[test_idx]
        labeled = te_fut >= 0
        te_true = np.full(len(test_idx), NO_CLASS)
        if labeled.any():
            lab = label_arrays(bid[test_idx[labeled]], ask[test_idx[labeled]], bid[te_fut[labeled]], ask[te_fut[labeled]])
            te_true[labeled] = true_classes(lab)

        tr_classes = true_classes(tr_labels)
        proportions = class_proportions(tr_classes) if (tr_classes != NO_CLASS).any() else None
        if sel.size == 0:
            predictions = np.full(len(test_idx), ABSTAIN)
            weights = None
        else:
            signs, weights = _fit_predict(G_train[:, sel][:, :, sel], G_cross[:, :, sel], tr_labels, config)
            predictions = combine_sign_arrays(signs)
        records[h] = WindowRecord(
            index=-1, train_start=train_start, test_start=test_start, test_stop=test_stop,
            predictions=predictions, labeled=labeled, true_classes=te_true,
            class_proportions=proportions, n_train_labeled=int(sel.size), weights=weights,
        )
    return records


def run_backtest(series: SnapshotSeries, config: BacktestConfig) -> BacktestReport:
    """Walk-forward evaluation of SimpleMKL or a single (feature, kernel) pair."""
    bounds = window_bounds(len(series), config)
    combos = list(range(N_COMBINATIONS)) if config.is_mkl else [combination_index(*config.model)]
    tables = _feature_tables(series, config.feature_config, sorted({m // BANK_SIZE + 1 for m in combos}))
    horizon_idx = {h: horizon_indices(series, h) for h in config.horizons}
    per_h = {h: [] for h in config.horizons}
    for w, b in enumerate(bounds):
        records = run_window(series, config, b, tables, horizon_idx)
        for h, rec in records.items():
            rec.index = w
            per_h[h].append(rec)
        log.info("window %d/%d done", w + 1, len(bounds))
    return BacktestReport(config, [HorizonResult(h, per_h[h]) for h in config.horizons])


def attach_significance(report: BacktestReport, iterations: int = 100_000, seed: Optional[int] = None) -> BacktestReport:
    """Fill each horizon's Monte Carlo p-value in place and return the report."""
    seed = report.config.seed if seed is None else seed
    for r in report.results:
        baselines = [b for b in (w.baseline() for w in r.windows) if b is not None]
        res = monte_carlo_pvalue(baselines, r.correct, iterations, seed)
        r.p_value, r.p_value_iterations, r.p_value_exceed = res.p_value, res.iterations, res.exceed_count
    return report


# --- kernel selection -------------------------------------------------------


def cross_validate_kernels(
    series: SnapshotSeries, config: BacktestConfig, folds: int = 10, limit: Optional[int] = None
) -> list:
    """Rank all 128 (feature, kernel) pairs by contiguous-fold CV accuracy.

    Accuracy on a fold is correct / non-abstained predictions (0 when every
    prediction abstains), averaged over folds and configured horizons. Returns
    ``(feature_id, kernel_index, cv_accuracy)`` sorted best first, ties by
    (feature_id, kernel_index).
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    fc = config.feature_config
    tables = _feature_tables(series, fc, FEATURE_IDS)
    bid, ask = series.best_bid, series.best_ask
    scores = np.zeros(N_COMBINATIONS)
    single = replace(config, model=(1, 1))

    for h in config.horizons:
        fut = horizon_indices(series, h)
        idx = np.arange(fc.warmup, len(series))
        idx = idx[fut[idx] >= 0]
        if limit is not None:
            idx = idx[:limit]
        if idx.size < 2 * folds:
            raise ValueError(
                f"insufficient data for {folds}-fold CV at horizon {h}: {idx.size} labeled instances"
            )
        labels = label_arrays(bid[idx], ask[idx], bid[fut[idx]], ask[fut[idx]])
        classes = true_classes(labels)
        parts = np.array_split(np.arange(idx.size), folds)
        for part in parts:
            tr = np.setdiff1d(np.arange(idx.size), part)
            G_train, G_cross = _window_grams(tables, idx[tr], idx[part], single, range(N_COMBINATIONS))
            for m in range(N_COMBINATIONS):
                cfg = replace(single, model=(m // BANK_SIZE + 1, m % BANK_SIZE + 1))
                signs, _ = _fit_predict(G_train[m:m + 1], G_cross[m:m + 1], labels[tr], cfg)
                pred = combine_sign_arrays(signs)
                made = pred != ABSTAIN
                if made.any():
                    scores[m] += (pred[made] == classes[part][made]).mean()
    scores /= folds * len(config.horizons)
    ranking = [(m // BANK_SIZE + 1, m % BANK_SIZE + 1, float(scores[m])) for m in range(N_COMBINATIONS)]
    ranking.sort(key=lambda t: (-t[2], t[0], t[1]))
    return ranking


# --- weight heatmap ---------------------------------------------------------


def weight_heatmap(reports: Sequence[BacktestReport]) -> np.ndarray:
    """128 x horizons matrix of mean kernel weight (over windows and the three classifiers).

    Columns follow the reports' horizons in order.
    """
    columns = []
    for rep in reports:
        for r in rep.results:
            stack = r.weight_stack()
            if stack is None:
                raise ValueError(f"no kernel weights for horizon {r.horizon} (single-kernel or untrained report)")
            columns.append(stack.reshape(-1, stack.shape[-1]).mean(axis=0))
    if not columns:
        raise ValueError("no reports given")
    return np.column_stack(columns)
