"""Experiment harness: degree sweeps, model comparisons, report rendering.

The harness owns the evaluation protocol so every experiment runs it
identically: window the series, split the windows chronologically, fit
on the training rows, forecast one step ahead on the test rows from
true lagged values, and score with MAE, RMSE and CV(RMSE).  Model
comparisons additionally run paired significance tests on the
per-point absolute errors of the two models.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Union

import numpy as np

from . import polynomial as poly
from . import rbf
from .data import TimeSeries, WindowedDataset, load_csv, make_windows, synth_ar, \
    synth_random_walk, synth_seasonal
from .errors import ConfigError, DataError, DegenerateSampleError, FitError, \
    UndefinedMetricError
from .metrics import MetricReport, metric_report, timed
from .rbf import RbfTrainConfig
from .stats import A_BETTER, B_BETTER, NO_DIFFERENCE, PairedTestResult, \
    paired_t_test, significance_verdict, wilcoxon_signed_rank

REPORT_SCHEMA_VERSION = 1

PC = "PC"
RBFNN = "RBFNN"


@dataclass(frozen=True)
class CsvSource:
    path: str
    column: Union[str, int] = 0
    has_header: bool = True


@dataclass(frozen=True)
class SynthSource:
    kind: str  # "seasonal", "walk" or "ar"
    n: int
    seed: int = 0
    params: dict = field(default_factory=dict)


DataSource = Union[CsvSource, SynthSource]


def resolve_source(source: DataSource) -> TimeSeries:
    """Materialize the configured data source as a TimeSeries."""
    if isinstance(source, CsvSource):
        return load_csv(source.path, source.column, source.has_header)
    if not isinstance(source, SynthSource):
        raise ConfigError(f"unknown data source type {type(source).__name__}")
    p = source.params
    if source.kind == "seasonal":
        return synth_seasonal(
            n=source.n, period=int(p.get("period", 12)),
            amplitude=float(p.get("amplitude", 1.0)),
            trend=float(p.get("trend", 0.0)),
            noise_sd=float(p.get("noise_sd", 0.0)), seed=source.seed,
        )
    if source.kind == "walk":
        return synth_random_walk(
            n=source.n, drift=float(p.get("drift", 0.0)),
            noise_sd=float(p.get("noise_sd", 1.0)), seed=source.seed,
        )
    if source.kind == "ar":
        coeffs = p.get("coeffs", (0.6, 0.3))
        return synth_ar(
            coeffs=list(coeffs), n=source.n,
            noise_sd=float(p.get("noise_sd", 0.0)), seed=source.seed,
        )
    raise ConfigError(f"unknown synthetic kind {source.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    source: DataSource
    window_d: int = 8
    train_fraction: float = 0.8
    degrees: tuple = (1, 2, 3, 4, 5)
    ridge_lambda: float = 0.0
    rbf_config: RbfTrainConfig = field(default_factory=RbfTrainConfig)
    seeds: tuple = (0,)
    alpha: float = 0.05

    def __post_init__(self):
        if self.window_d < 1:
            raise ConfigError(f"window_d must be >= 1, got {self.window_d}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.degrees or any(k < 1 for k in self.degrees):
            raise ConfigError(f"degrees must be a non-empty list of positive ints, got {self.degrees}")
        if self.ridge_lambda < 0:
            raise ConfigError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")


def config_hash(config: ExperimentConfig) -> str:
    """Stable digest of everything that determines the run (times excluded)."""
    doc = asdict(config)
    blob = json.dumps(doc, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _window_hash(w: WindowedDataset) -> str:
    h = hashlib.sha256()
    h.update(str(w.inputs.shape).encode())
    h.update(np.ascontiguousarray(w.inputs).tobytes())
    h.update(np.ascontiguousarray(w.targets).tobytes())
    return h.hexdigest()[:16]


def windowed_split(series: TimeSeries, d: int,
                   train_fraction: float) -> tuple[WindowedDataset, WindowedDataset]:
    """Window the whole series, then cut the rows at the chronological split.

    The boundary is floor(n * train_fraction) observations.  Training
    rows are exactly those whose target falls inside the training span,
    so nothing from the test span ever reaches the fit.  Test rows carry
    one prediction for every observation after the boundary; the first
    few test windows reach back into the training span, which is the
    usual teacher-forced setup for one-step forecasts.
    """
    n = len(series)
    n_train = int(math.floor(n * train_fraction))
    boundary = n_train - d  # index of the first test row
    if boundary < 1:
        raise DataError(
            f"train span of {n_train} points is too short for windows of d={d}"
        )
    full = make_windows(series, d)
    if boundary >= len(full):
        raise DataError(
            f"train_fraction={train_fraction} leaves no test windows for n={n}"
        )
    train = WindowedDataset(d, full.inputs[:boundary], full.targets[:boundary])
    test = WindowedDataset(d, full.inputs[boundary:], full.targets[boundary:])
    return train, test


@dataclass(frozen=True)
class SweepRow:
    degree: int
    exec_seconds: float | None
    metrics: MetricReport | None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class SweepResult:
    dataset: str
    window_d: int
    ridge_lambda: float
    rows: tuple

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            rows.append({
                "degree": r.degree,
                "exec_seconds": r.exec_seconds,
                "mae": r.metrics.mae if r.metrics else None,
                "rmse": r.metrics.rmse if r.metrics else None,
                "cv_rmse_pct": r.metrics.cv_rmse_pct if r.metrics else None,
                "error": r.error,
            })
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "dataset": self.dataset,
            "window_d": self.window_d,
            "ridge_lambda": self.ridge_lambda,
            "rows": rows,
        }


def run_degree_sweep(config: ExperimentConfig) -> SweepResult:
    """Fit and score the polynomial model at every configured degree.

    A degree whose fit or scoring fails contributes a marked failure row
    instead of aborting the sweep.
    """
    series = resolve_source(config.source)
    train, test = windowed_split(series, config.window_d, config.train_fraction)
    rows = []
    for degree in config.degrees:
        def job(k: int = degree) -> np.ndarray:
            model = poly.fit(train, k, config.ridge_lambda)
            return poly.rolling_forecast(model, test)
        try:
            res = timed(job)
            rows.append(SweepRow(
                degree=degree, exec_seconds=res.seconds,
                metrics=metric_report(test.targets, res.value),
            ))
        except (FitError, UndefinedMetricError) as exc:
            rows.append(SweepRow(degree=degree, exec_seconds=None,
                                 metrics=None, error=str(exc)))
    return SweepResult(dataset=series.name, window_d=config.window_d,
                       ridge_lambda=config.ridge_lambda, rows=tuple(rows))


@dataclass(frozen=True)
class ModelRow:
    model: str
    exec_seconds: float
    metrics: MetricReport
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ComparisonReport:
    dataset: str
    models: tuple          # exactly (PC row, RBFNN row)
    t_test: PairedTestResult | None
    wilcoxon: PairedTestResult | None
    verdict: str
    degenerate: bool
    alpha: float
    metadata: dict

    def to_dict(self) -> dict:
        def test_dict(t: PairedTestResult | None) -> dict | None:
            if t is None:
                return None
            d = {
                "method": t.method,
                "statistic": t.statistic,
                "p_value": t.p_value,
                "n_effective": t.n_effective,
                "effect_direction": t.effect_direction,
                "alternative": t.alternative,
            }
            if t.method.startswith("wilcoxon"):
                d["w_plus"] = t.w_plus
                d["w_minus"] = t.w_minus
            return d

        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "dataset": self.dataset,
            "models": [
                {
                    "model": m.model,
                    "exec_seconds": m.exec_seconds,
                    "mae": m.metrics.mae,
                    "rmse": m.metrics.rmse,
                    "cv_rmse_pct": m.metrics.cv_rmse_pct,
                    "detail": m.detail,
                }
                for m in self.models
            ],
            "tests": {
                "paired_t": test_dict(self.t_test),
                "wilcoxon": test_dict(self.wilcoxon),
            },
            "verdict": self.verdict,
            "degenerate": self.degenerate,
            "alpha": self.alpha,
            "metadata": self.metadata,
        }


def _map_verdict(verdict: str) -> str:
    return {A_BETTER: "PC_better", B_BETTER: "RBFNN_better",
            NO_DIFFERENCE: NO_DIFFERENCE}[verdict]


def run_comparison(config: ExperimentConfig, seed: int | None = None) -> ComparisonReport:
    """Head-to-head PC vs RBFNN on identical train/test windows.

    The polynomial model runs at the smallest configured degree.  The
    RBF network trains with the given seed (first configured seed when
    omitted), growing units if the rbf config carries a target_mse.
    Significance tests compare per-point absolute errors; ties that are
    too degenerate to test are reported as such rather than failing.
    """
    series = resolve_source(config.source)
    train, test = windowed_split(series, config.window_d, config.train_fraction)
    rbf_seed = int(config.seeds[0] if seed is None else seed)
    degree = int(min(config.degrees))

    def pc_job() -> np.ndarray:
        model = poly.fit(train, degree, config.ridge_lambda)
        return poly.rolling_forecast(model, test)

    try:
        pc_run = timed(pc_job)
    except FitError as exc:
        raise FitError(f"comparison aborted at stage 'PC fit': {exc}") from exc
    pc_row = ModelRow(
        model=PC, exec_seconds=pc_run.seconds,
        metrics=metric_report(test.targets, pc_run.value),
        detail={"degree": degree, "ridge_lambda": config.ridge_lambda},
    )

    rbf_cfg = replace(config.rbf_config, seed=rbf_seed)
    grow = rbf_cfg.target_mse is not None
    trace_box: dict = {}

    def rbf_job() -> np.ndarray:
        if grow:
            net, trace = rbf.grow_until_target(train.inputs, train.targets, rbf_cfg)
        else:
            net, trace = rbf.fit_fixed(train.inputs, train.targets, rbf_cfg)
        trace_box["trace"] = trace
        return rbf.batch_forward(net, test.inputs)

    try:
        rbf_run = timed(rbf_job)
    except FitError as exc:
        raise FitError(f"comparison aborted at stage 'RBFNN training': {exc}") from exc
    trace = trace_box["trace"]
    rbf_row = ModelRow(
        model=RBFNN, exec_seconds=rbf_run.seconds,
        metrics=metric_report(test.targets, rbf_run.value),
        detail={
            "units": trace.final_units, "epochs": trace.epochs_run,
            "learning_rate": rbf_cfg.learning_rate, "batch_size": rbf_cfg.batch_size,
            "seed": rbf_seed, "mode": "grow" if grow else "fixed",
            "stop_reason": trace.stop_reason, "train_mse": trace.best_mse,
        },
    )

    err_pc = np.abs(test.targets - pc_run.value)
    err_rbf = np.abs(test.targets - rbf_run.value)
    degenerate = False
    t_res = w_res = None
    if np.ptp(err_pc - err_rbf) == 0.0:
        # Zero-spread differences carry no usable ranking or variance
        # information, so neither test is attempted.
        degenerate = True
    else:
        try:
            t_res = paired_t_test(err_pc, err_rbf)
        except DegenerateSampleError:
            degenerate = True
        try:
            w_res = wilcoxon_signed_rank(err_pc, err_rbf)
        except DegenerateSampleError:
            degenerate = True

    primary = t_res if t_res is not None else w_res
    if primary is None:
        verdict = NO_DIFFERENCE
    else:
        verdict = _map_verdict(significance_verdict(primary, config.alpha))

    metadata = {
        "window_d": config.window_d,
        "degree": degree,
        "train_fraction": config.train_fraction,
        "seed": rbf_seed,
        "seeds": list(config.seeds),
        "alpha": config.alpha,
        "config_hash": config_hash(config),
        "train_window_hash": _window_hash(train),
        "test_window_hash": _window_hash(test),
        "n_train_windows": len(train),
        "n_test_windows": len(test),
    }
    return ComparisonReport(
        dataset=series.name, models=(pc_row, rbf_row),
        t_test=t_res, wilcoxon=w_res, verdict=verdict,
        degenerate=degenerate, alpha=config.alpha, metadata=metadata,
    )


@dataclass(frozen=True)
class ComparisonSuite:
    """One comparison per configured seed plus a median summary."""

    reports: tuple
    median_summary: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "reports": [r.to_dict() for r in self.reports],
            "median_summary": self.median_summary,
        }


def run_comparison_suite(config: ExperimentConfig) -> ComparisonSuite:
    reports = tuple(run_comparison(config, seed=s) for s in config.seeds)
    summary = {}
    for idx, name in ((0, PC), (1, RBFNN)):
        rows = [r.models[idx] for r in reports]
        summary[name] = {
            "exec_seconds": float(np.median([m.exec_seconds for m in rows])),
            "mae": float(np.median([m.metrics.mae for m in rows])),
            "rmse": float(np.median([m.metrics.rmse for m in rows])),
            "cv_rmse_pct": float(np.median([m.metrics.cv_rmse_pct for m in rows])),
        }
    return ComparisonSuite(reports=reports, median_summary=summary)


# -- rendering ---------------------------------------------------------

_COMPARE_HEADER = "Model | Execution Time (s) | MAE | RMSE | CV(RMSE) (%)"
_SWEEP_HEADER = "Degree | Execution Time (s) | MAE | RMSE | CV(RMSE) (%) | Status"


def _fmt_metrics(exec_seconds: float | None, metrics: MetricReport | None) -> list[str]:
    if metrics is None:
        return ["-", "-", "-", "-"]
    return [
        f"{exec_seconds:.2f}",
        f"{metrics.mae:.4f}",
        f"{metrics.rmse:.4f}",
        f"{metrics.cv_rmse_pct:.4f}",
    ]


def _json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2)


def _test_line(label: str, t: PairedTestResult | None) -> str:
    if t is None:
        return f"{label}: not available (degenerate sample)"
    return (f"{label}: statistic={t.statistic:.4f}, p={t.p_value:.4f}, "
            f"n={t.n_effective}")


def render_comparison(report: ComparisonReport, fmt: str = "markdown") -> str:
    if fmt == "json":
        return _json_text(report.to_dict())
    if fmt == "csv":
        lines = ["model,exec_seconds,mae,rmse,cv_rmse_pct"]
        for m in report.models:
            lines.append(",".join([m.model] + _fmt_metrics(m.exec_seconds, m.metrics)))
        lines.append(f"verdict,{report.verdict},,,")
        return "\n".join(lines)
    if fmt == "markdown":
        sep = " | ".join(["---"] * 5)
        lines = [f"### {report.dataset}", "", _COMPARE_HEADER, sep]
        for m in report.models:
            lines.append(" | ".join([m.model] + _fmt_metrics(m.exec_seconds, m.metrics)))
        lines.append("")
        lines.append(_test_line("Paired t-test", report.t_test))
        lines.append(_test_line("Wilcoxon signed-rank", report.wilcoxon))
        verdict = report.verdict + (" (degenerate sample)" if report.degenerate else "")
        lines.append(f"Verdict: {verdict}")
        return "\n".join(lines)
    raise ConfigError(f"unknown format {fmt!r}")


def render_sweep(result: SweepResult, fmt: str = "markdown") -> str:
    if fmt == "json":
        return _json_text(result.to_dict())
    if fmt == "csv":
        lines = ["degree,exec_seconds,mae,rmse,cv_rmse_pct,error"]
        for r in result.rows:
            cells = [str(r.degree)] + _fmt_metrics(r.exec_seconds, r.metrics)
            cells.append("" if r.error is None else r.error.replace(",", ";"))
            lines.append(",".join(cells))
        return "\n".join(lines)
    if fmt == "markdown":
        sep = " | ".join(["---"] * 6)
        lines = [f"### {result.dataset} (window d={result.window_d})", "",
                 _SWEEP_HEADER, sep]
        for r in result.rows:
            cells = [str(r.degree)] + _fmt_metrics(r.exec_seconds, r.metrics)
            cells.append("ok" if r.error is None else f"failed: {r.error}")
            lines.append(" | ".join(cells))
        return "\n".join(lines)
    raise ConfigError(f"unknown format {fmt!r}")


def render_suite(suite: ComparisonSuite, fmt: str = "markdown") -> str:
    if fmt == "json":
        return _json_text(suite.to_dict())
    if fmt == "csv":
        lines = ["seed,model,exec_seconds,mae,rmse,cv_rmse_pct,verdict"]
        for r in suite.reports:
            for m in r.models:
                lines.append(",".join(
                    [str(r.metadata["seed"]), m.model]
                    + _fmt_metrics(m.exec_seconds, m.metrics) + [r.verdict]
                ))
        return "\n".join(lines)
    if fmt == "markdown":
        parts = [render_comparison(r, "markdown") for r in suite.reports]
        lines = ["## Median over seeds", "", _COMPARE_HEADER,
                 " | ".join(["---"] * 5)]
        for name in (PC, RBFNN):
            s = suite.median_summary[name]
            lines.append(" | ".join([
                name, f"{s['exec_seconds']:.2f}", f"{s['mae']:.4f}",
                f"{s['rmse']:.4f}", f"{s['cv_rmse_pct']:.4f}",
            ]))
        return "\n\n".join(parts + ["\n".join(lines)])
    raise ConfigError(f"unknown format {fmt!r}")


def render_report(obj, fmt: str = "markdown") -> str:
    """Render any harness result in markdown, csv or json."""
    if isinstance(obj, ComparisonReport):
        return render_comparison(obj, fmt)
    if isinstance(obj, SweepResult):
        return render_sweep(obj, fmt)
    if isinstance(obj, ComparisonSuite):
        return render_suite(obj, fmt)
    raise ConfigError(f"cannot render object of type {type(obj).__name__}")


_TEST_SCHEMA = {
    "type": ["object", "null"],
    "required": ["method", "statistic", "p_value", "n_effective",
                 "effect_direction", "alternative"],
    "properties": {
        "method": {"enum": ["paired_t", "wilcoxon_exact", "wilcoxon_normal_approx"]},
        "statistic": {"type": "number"},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "n_effective": {"type": "integer", "minimum": 1},
        "effect_direction": {"enum": [-1, 0, 1]},
        "alternative": {"const": "two-sided"},
        "w_plus": {"type": ["number", "null"]},
        "w_minus": {"type": ["number", "null"]},
    },
}

COMPARISON_REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "lagcast comparison report",
    "type": "object",
    "required": ["schema_version", "dataset", "models", "tests", "verdict",
                 "degenerate", "alpha", "metadata"],
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "dataset": {"type": "string"},
        "models": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {
                "type": "object",
                "required": ["model", "exec_seconds", "mae", "rmse", "cv_rmse_pct"],
                "properties": {
                    "model": {"enum": [PC, RBFNN]},
                    "exec_seconds": {"type": "number", "minimum": 0},
                    "mae": {"type": "number", "minimum": 0},
                    "rmse": {"type": "number", "minimum": 0},
                    "cv_rmse_pct": {"type": "number"},
                    "detail": {"type": "object"},
                },
            },
        },
        "tests": {
            "type": "object",
            "required": ["paired_t", "wilcoxon"],
            "properties": {"paired_t": _TEST_SCHEMA, "wilcoxon": _TEST_SCHEMA},
        },
        "verdict": {"enum": ["PC_better", "RBFNN_better", NO_DIFFERENCE]},
        "degenerate": {"type": "boolean"},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "metadata": {"type": "object"},
    },
}

COMPARISON_SUITE_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "lagcast comparison suite",
    "type": "object",
    "required": ["schema_version", "reports", "median_summary"],
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "reports": {"type": "array", "minItems": 1,
                    "items": COMPARISON_REPORT_SCHEMA},
        "median_summary": {"type": "object"},
    },
}
