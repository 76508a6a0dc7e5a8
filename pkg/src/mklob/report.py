"""Report serialisation (JSON), ASCII tables and the weight heatmap grid."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from typing import Sequence

import numpy as np

from .backtest import (
    N_COMBINATIONS, BacktestConfig, BacktestReport, HorizonResult, WindowRecord,
    combination_label, weight_heatmap,
)
from .features import FeatureConfig

FORMAT_VERSION = 1

POSSIBLE_TITLE = "Percentage of time predictions possible"
ACCURACY_TITLE = "Percentage accuracy of predictions"


def config_to_dict(config: BacktestConfig) -> dict:
    d = asdict(config)
    d["model"] = config.model if config.is_mkl else list(config.model)
    return d


def config_from_dict(d: dict) -> BacktestConfig:
    d = dict(d)
    fc = d.pop("feature_config", None) or {}
    model = d.pop("model", "mkl")
    if not isinstance(model, str):
        model = tuple(model)
    for key in ("horizons", "rbf_multipliers", "poly_degrees", "net_variances"):
        if key in d:
            d[key] = tuple(d[key])
    return BacktestConfig(model=model, feature_config=FeatureConfig(**fc), **d)


def _window_to_dict(w: WindowRecord) -> dict:
    return {
        "index": w.index,
        "train_start": w.train_start,
        "test_start": w.test_start,
        "test_stop": w.test_stop,
        "n_train_labeled": w.n_train_labeled,
        "class_proportions": None if w.class_proportions is None else w.class_proportions.tolist(),
        "predictions": w.predictions.astype(int).tolist(),
        "labeled": w.labeled.astype(bool).tolist(),
        "true_classes": w.true_classes.astype(int).tolist(),
        "possible": w.possible,
        "correct": w.correct,
    }


def _window_from_dict(d: dict, weights) -> WindowRecord:
    props = d.get("class_proportions")
    return WindowRecord(
        index=d["index"],
        train_start=d["train_start"],
        test_start=d["test_start"],
        test_stop=d["test_stop"],
        predictions=np.asarray(d["predictions"], dtype=int),
        labeled=np.asarray(d["labeled"], dtype=bool),
        true_classes=np.asarray(d["true_classes"], dtype=int),
        class_proportions=None if props is None else np.asarray(props, dtype=float),
        n_train_labeled=d["n_train_labeled"],
        weights=None if weights is None else np.asarray(weights, dtype=float),
    )


def report_to_dict(report: BacktestReport) -> dict:
    """JSON-ready layout.

    ``weights`` (MKL only) is indexed ``[combination][window][classifier]``;
    a window whose classifiers could not be trained holds ``null``.
    """
    results = []
    for r in report.results:
        entry = {
            "horizon": r.horizon,
            "possible_pct": r.possible_pct,
            "accuracy_pct": r.accuracy_pct,
            "counts": r.counts(),
            "p_value": r.p_value,
            "p_value_iterations": r.p_value_iterations,
            "p_value_exceed": r.p_value_exceed,
            "windows": [_window_to_dict(w) for w in r.windows],
        }
        if report.config.is_mkl:
            entry["weights"] = [
                [None if w.weights is None else w.weights[:, m].tolist() for w in r.windows]
                for m in range(N_COMBINATIONS)
            ]
        results.append(entry)
    return {
        "format_version": FORMAT_VERSION,
        "method": report.config.method_label,
        "horizons": list(report.horizons),
        "config": config_to_dict(report.config),
        "results": results,
    }


def report_from_dict(d: dict) -> BacktestReport:
    config = config_from_dict(d["config"])
    results = []
    for entry in d["results"]:
        weights = entry.get("weights")
        windows = []
        for k, wd in enumerate(entry["windows"]):
            wk = None
            if weights is not None and weights[0][k] is not None:
                wk = np.array([weights[m][k] for m in range(N_COMBINATIONS)]).T
            windows.append(_window_from_dict(wd, wk))
        results.append(HorizonResult(
            horizon=entry["horizon"],
            windows=windows,
            p_value=entry.get("p_value"),
            p_value_iterations=entry.get("p_value_iterations"),
            p_value_exceed=entry.get("p_value_exceed"),
        ))
    return BacktestReport(config, results)


def save_report(report: BacktestReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh)


def load_report(path) -> BacktestReport:
    with open(path, encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


def _fmt_horizon(h) -> str:
    return f"{h:g}"


def _table(title: str, reports: Sequence[BacktestReport], value) -> str:
    horizons = []
    for rep in reports:
        for h in rep.horizons:
            if h not in horizons:
                horizons.append(h)
    header = ["dt"] + [rep.config.method_label for rep in reports]
    rows = []
    for h in horizons:
        row = [_fmt_horizon(h)]
        for rep in reports:
            try:
                v = value(rep.result(h))
            except KeyError:
                v = None
            row.append("n/a" if v is None else f"{v:.1f}")
        rows.append(row)
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    rule = "+" + "+".join("-" * (w + 2) for w in widths) + "+"

    def line(cells):
        return "| " + " | ".join(c.rjust(w) for c, w in zip(cells, widths)) + " |"

    out = [title, rule, line(header), rule]
    out += [line(r) for r in rows]
    out.append(rule)
    return "\n".join(out)


def render_tables(reports: Sequence[BacktestReport]) -> str:
    """Both tables, one row per horizon and one column per method."""
    if isinstance(reports, BacktestReport):
        reports = [reports]
    possible = _table(POSSIBLE_TITLE, reports, lambda r: r.possible_pct)
    accuracy = _table(ACCURACY_TITLE, reports, lambda r: r.accuracy_pct)
    return possible + "\n\n" + accuracy + "\n"


def render_pvalues(reports: Sequence[BacktestReport]) -> str:
    lines = []
    for rep in reports:
        for r in rep.results:
            if r.p_value is not None:
                lines.append(
                    f"{rep.config.method_label} dt={_fmt_horizon(r.horizon)}: p={r.p_value:.6g} "
                    f"({r.p_value_exceed}/{r.p_value_iterations} replays exceeded {r.correct} correct)"
                )
    return "\n".join(lines) + ("\n" if lines else "")


def heatmap_csv(reports: Sequence[BacktestReport]) -> str:
    """128 x horizons grid of mean kernel weights as CSV, first column the F/K label."""
    grid = weight_heatmap(reports)
    horizons = [h for rep in reports for h in rep.horizons]
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["combination"] + [_fmt_horizon(h) for h in horizons])
    for m in range(grid.shape[0]):
        writer.writerow([combination_label(m)] + [repr(float(v)) for v in grid[m]])
    return out.getvalue()


def ranking_csv(ranking) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["rank", "feature_id", "kernel_index", "combination", "cv_accuracy"])
    for k, (f, kern, acc) in enumerate(ranking, start=1):
        writer.writerow([k, f, kern, f"F{f}K{kern}", repr(acc)])
    return out.getvalue()
