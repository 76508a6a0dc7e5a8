"""Command-line front end.

Subcommands: ``generate``, ``backtest``, ``cv-select``, ``pvalue``, ``report``.
A JSON run configuration may supply any section; command-line flags override it::

    {
      "synth":        {"n_snapshots": 5000, "drift_coupling": 1.0, ...},
      "features":     {"lags": [5, 10, 20, 50, 100], "half_lives": [5, 10, 20, 50, 100]},
      "kernels":      {"rbf_multipliers": [...], "poly_degrees": [...], "net_variances": [...]},
      "backtest":     {"train_size": 100, "test_size": 100, "horizons": [5, 10], "model": "mkl",
                       "c": 1.0, "svm_tolerance": 1e-4, "gap_tolerance": 1e-3, ...},
      "significance": {"iterations": 100000},
      "seed": 0,
      "output":       {"report": "report.json", "tables": "tables.txt", "heatmap": "heatmap.csv"}
    }
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from . import backtest as bt
from .features import FeatureConfig
from .lob_data import SynthConfig, format_snapshots, generate_synthetic, read_csv
from .report import (
    heatmap_csv, load_report, ranking_csv, render_pvalues, render_tables, report_to_dict,
)

log = logging.getLogger("mklob")


class CLIError(Exception):
    pass


@dataclass
class RunConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    backtest: bt.BacktestConfig = field(default_factory=bt.BacktestConfig)
    significance_iterations: int = 100_000
    seed: int = 0
    output: dict = field(default_factory=dict)


_SECTIONS = {"synth", "features", "kernels", "backtest", "significance", "seed", "output"}


def parse_model(text: str):
    """``mkl``, ``F6K16`` or ``6,16``."""
    t = str(text).strip()
    if t.lower() in ("mkl", "simplemkl"):
        return bt.MKL
    m = re.fullmatch(r"[Ff](\d+)[Kk](\d+)", t) or re.fullmatch(r"(\d+)\s*,\s*(\d+)", t)
    if not m:
        raise CLIError(f"cannot parse model {text!r}; use 'mkl', 'F<f>K<k>' or '<f>,<k>'")
    return (int(m.group(1)), int(m.group(2)))


def _known(cls, section: dict, name: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise CLIError(f"unknown {name} setting(s): {', '.join(sorted(unknown))}")
    return section


def build_run_config(doc: dict) -> RunConfig:
    """Validate every section of a configuration document before any work starts."""
    if not isinstance(doc, dict):
        raise CLIError("config must be a JSON object")
    unknown = set(doc) - _SECTIONS
    if unknown:
        raise CLIError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    seed = int(doc.get("seed", 0))
    try:
        synth_doc = dict(doc.get("synth", {}))
        synth_doc.setdefault("seed", seed)
        synth = SynthConfig(**_known(SynthConfig, synth_doc, "synth"))

        feats = FeatureConfig(**_known(FeatureConfig, dict(doc.get("features", {})), "features"))
        bt_doc = dict(doc.get("backtest", {}))
        kern = dict(doc.get("kernels", {}))
        for key in ("rbf_multipliers", "poly_degrees", "net_variances"):
            if key in kern:
                bt_doc[key] = tuple(kern.pop(key))
        if kern:
            raise CLIError(f"unknown kernels setting(s): {', '.join(sorted(kern))}")
        if "model" in bt_doc:
            bt_doc["model"] = parse_model(bt_doc["model"]) if isinstance(bt_doc["model"], str) else tuple(bt_doc["model"])
        if "horizons" in bt_doc:
            bt_doc["horizons"] = tuple(bt_doc["horizons"])
        bt_doc.setdefault("seed", seed)
        _known(bt.BacktestConfig, bt_doc, "backtest")
        backtest = bt.BacktestConfig(feature_config=feats, **bt_doc)

        sig = dict(doc.get("significance", {}))
        iterations = int(sig.pop("iterations", 100_000))
        if sig:
            raise CLIError(f"unknown significance setting(s): {', '.join(sorted(sig))}")
        if iterations < 1:
            raise CLIError("significance iterations must be >= 1")
    except (TypeError, ValueError) as exc:
        raise CLIError(f"invalid config: {exc}") from None
    output = doc.get("output", {})
    if not isinstance(output, dict):
        raise CLIError("output section must be an object")
    return RunConfig(synth, backtest, iterations, seed, dict(output))


def load_run_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return build_run_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise CLIError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CLIError(f"config {path} is not valid JSON: {exc}") from None
    return build_run_config(doc)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mklob-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_series(path: str):
    if not os.path.exists(path):
        raise CLIError(f"data file not found: {path}")
    return read_csv(path)


def _apply_backtest_flags(cfg: RunConfig, args) -> bt.BacktestConfig:
    b = cfg.backtest
    updates = {}
    if getattr(args, "model", None):
        updates["model"] = parse_model(args.model)
    if getattr(args, "horizons", None):
        updates["horizons"] = tuple(float(h) for h in args.horizons.split(","))
    if getattr(args, "train_size", None):
        updates["train_size"] = args.train_size
    if getattr(args, "test_size", None):
        updates["test_size"] = args.test_size
    if getattr(args, "c", None):
        updates["c"] = args.c
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    try:
        return replace(b, **updates)
    except ValueError as exc:
        raise CLIError(f"invalid option: {exc}") from None


def cmd_generate(args) -> None:
    cfg = load_run_config(args.config)
    updates = {}
    if args.n is not None:
        updates["n_snapshots"] = args.n
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.coupling is not None:
        updates["drift_coupling"] = args.coupling
    if args.inter_arrival is not None:
        updates["mean_inter_arrival"] = args.inter_arrival
    try:
        synth = replace(cfg.synth, **updates)
    except ValueError as exc:
        raise CLIError(f"invalid option: {exc}") from None
    _write_atomic(args.out, format_snapshots(generate_synthetic(synth)))


def cmd_backtest(args) -> None:
    cfg = load_run_config(args.config)
    config = _apply_backtest_flags(cfg, args)
    series = _read_series(args.data)
    if len(series) < config.minimum_rows():
        raise CLIError(
            f"{args.data} has {len(series)} rows; backtest needs at least {config.minimum_rows()} "
            f"(warm-up {config.feature_config.warmup} + train {config.train_size} + test {config.test_size})"
        )
    out = args.out or cfg.output.get("report")
    if not out:
        raise CLIError("no report path: pass --out or set output.report in the config")
    report = bt.run_backtest(series, config)
    iterations = args.pvalue_iterations if args.pvalue_iterations is not None else 0
    if iterations > 0:
        bt.attach_significance(report, iterations, config.seed)
    _write_atomic(out, json.dumps(report_to_dict(report)))
    tables = args.tables or cfg.output.get("tables")
    text = render_tables([report]) + render_pvalues([report])
    if tables:
        _write_atomic(tables, text)
    if not args.quiet:
        sys.stdout.write(text)


def cmd_cv_select(args) -> None:
    cfg = load_run_config(args.config)
    config = _apply_backtest_flags(cfg, args)
    series = _read_series(args.data)
    try:
        ranking = bt.cross_validate_kernels(series, config, args.folds, limit=args.limit)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    text = ranking_csv(ranking)
    _write_atomic(args.out, text)
    if not args.quiet:
        for f, k, acc in ranking[:3]:
            sys.stdout.write(f"F{f}K{k}\t{acc:.4f}\n")


def _load_reports(paths):
    reports = []
    for p in paths:
        if not os.path.exists(p):
            raise CLIError(f"report file not found: {p}")
        try:
            reports.append(load_report(p))
        except (KeyError, TypeError, ValueError) as exc:
            raise CLIError(f"cannot read report {p}: {exc}") from None
    return reports


def cmd_pvalue(args) -> None:
    (report,) = _load_reports([args.report])
    seed = args.seed if args.seed is not None else report.config.seed
    bt.attach_significance(report, args.iterations, seed)
    _write_atomic(args.out or args.report, json.dumps(report_to_dict(report)))
    if not args.quiet:
        sys.stdout.write(render_pvalues([report]))


def cmd_report(args) -> None:
    reports = _load_reports(args.reports)
    text = render_tables(reports) + render_pvalues(reports)
    if args.tables:
        _write_atomic(args.tables, text)
    if args.heatmap:
        mkl = [r for r in reports if r.config.is_mkl]
        if not mkl:
            raise CLIError("heatmap needs at least one SimpleMKL report")
        _write_atomic(args.heatmap, heatmap_csv(mkl))
    if not args.quiet:
        sys.stdout.write(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mklob", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic order book CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--coupling", type=float, help="drift coupling to volume imbalance")
    g.add_argument("--inter-arrival", type=float, help="mean inter-arrival time in ms")
    g.add_argument("--config")
    g.set_defaults(func=cmd_generate)

    def common(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--config")
        sp.add_argument("--model", help="'mkl' or a pair such as F6K16")
        sp.add_argument("--horizons", help="comma-separated seconds, e.g. 5,10,20")
        sp.add_argument("--train-size", type=int)
        sp.add_argument("--test-size", type=int)
        sp.add_argument("--c", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--quiet", action="store_true")

    b = sub.add_parser("backtest", help="rolling-window backtest")
    common(b)
    b.add_argument("--out")
    b.add_argument("--tables")
    b.add_argument("--pvalue-iterations", type=int)
    b.set_defaults(func=cmd_backtest)

    c = sub.add_parser("cv-select", help="rank the 128 feature/kernel pairs by cross-validation")
    common(c)
    c.add_argument("--out", required=True)
    c.add_argument("--folds", type=int, default=10)
    c.add_argument("--limit", type=int, help="use only the first N labeled instances")
    c.set_defaults(func=cmd_cv_select)

    v = sub.add_parser("pvalue", help="add Monte Carlo p-values to a report")
    v.add_argument("--report", required=True)
    v.add_argument("--iterations", type=int, default=100_000)
    v.add_argument("--seed", type=int)
    v.add_argument("--out")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_pvalue)

    r = sub.add_parser("report", help="render stored reports as tables and a heatmap grid")
    r.add_argument("reports", nargs="+")
    r.add_argument("--tables")
    r.add_argument("--heatmap")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise CLIError("missing subcommand (generate, backtest, cv-select, pvalue, report)")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        args.func(args)
    except CLIError as exc:
        sys.stderr.write(f"mklob: error: {exc}\n")
        return 2
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"mklob: error: {' '.join(str(exc).split())}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
