"""Multiple kernel learning on limit order book snapshots."""

from .lob_data import (
    BookValidationError, OrderBookSnapshot, ParseError, SnapshotSeries, SynthConfig,
    format_snapshots, generate_synthetic, horizon_indices, parse_snapshots, read_csv,
    snapshot_at_horizon, write_csv,
)
from .features import FeatureConfig, FeatureMatrix, build_feature, feature_matrix, feature_table, standardize
from .kernels import GramMatrix, KernelBank, KernelSpec, default_kernel_bank, gram, kernel_eval
from .svm import SVMModel, SVMProblem, decision_values, dual_objective, train_svm
from .mkl import MKLModel, MKLProblem, combine_grams, objective_and_gradient, train_simplemkl
from .labeling import DirectionalLabel, Prediction, combine_signs, label_instance
from .significance import SignificanceResult, WindowBaseline, monte_carlo_pvalue
from .backtest import (
    BacktestConfig, BacktestReport, HorizonResult, attach_significance, cross_validate_kernels,
    run_backtest, weight_heatmap,
)

__version__ = "0.1.0"
