"""Seeded gamma sweeps and the CSV/JSON files they leave behind.

Run ``r`` uses channel (and start-point) seed ``base_seed + r`` for every
gamma, so different gammas are compared on identical channels. One reliability
matrix, drawn from ``base_seed``, is shared by the whole sweep unless
``redraw_reliability`` is set.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, metrics, model
from .metrics import METRIC_NAMES, MetricsReport
from .model import SystemConfig
from .solver import IterateTrace, SolveResult, SolverAbort, SolverParams, solve

log = logging.getLogger(__name__)

DEFAULT_GAMMAS = (0.0, 3.334, 33.34, 166.7, 333.4)
THREADS_ENV = "BEAMSCULPT_THREADS"


def fmt(value) -> str:
    """Full-precision float text so reruns diff byte-for-byte."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def gamma_tag(gamma: float) -> str:
    return format(gamma, "g")


@dataclass
class SweepSpec:
    gamma_values: list[float] = field(default_factory=lambda: list(DEFAULT_GAMMAS))
    n_runs: int = 10
    base_seed: int = 0
    config: SystemConfig = field(default_factory=SystemConfig)
    solver: SolverParams = field(default_factory=SolverParams)
    output_dir: Path = Path("sweep_out")
    redraw_reliability: bool = False
    zero_tol: float = metrics.DEFAULT_ZERO_TOL
    reliability_threshold: float = metrics.DEFAULT_RELIABILITY_THRESHOLD
    # Overrides the configured reliability when given (used for controlled experiments).
    beta: np.ndarray | None = None

    def __post_init__(self):
        if not self.gamma_values:
            raise ValueError("gamma_values must not be empty")
        if any(not (g >= 0 and math.isfinite(g)) for g in self.gamma_values):
            raise ValueError("gamma values must be finite and >= 0")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be >= 0")
        self.gamma_values = sorted(float(g) for g in self.gamma_values)
        self.output_dir = Path(self.output_dir)

    def echo(self) -> dict:
        return {
            "gamma_values": self.gamma_values,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "config": self.config.to_dict(),
            "solver": asdict(self.solver),
            "redraw_reliability": self.redraw_reliability,
            "zero_tol": self.zero_tol,
            "reliability_threshold": self.reliability_threshold,
            "custom_beta": self.beta is not None,
        }


@dataclass
class RunOutcome:
    gamma: float
    run: int
    seed: int
    report: MetricsReport
    result: SolveResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class SweepOutcome:
    summary: list[dict]
    runs: list[RunOutcome]
    beta: np.ndarray


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer %s=%r", THREADS_ENV, env)
    return os.cpu_count() or 1


def run_single(h: np.ndarray, beta: np.ndarray, config: SystemConfig, params: SolverParams,
               seed: int, gamma: float, zero_tol: float = metrics.DEFAULT_ZERO_TOL,
               reliability_threshold: float = metrics.DEFAULT_RELIABILITY_THRESHOLD):
    result = solve(h, beta, config, params, seed, sparsity_weight=gamma)
    report = metrics.evaluate(result.w_final, h, beta, config, zero_tol, reliability_threshold)
    return result, report


def _job(args) -> RunOutcome:
    spec, gamma, run, beta = args
    seed = spec.base_seed + run
    config = spec.config
    h = model.generate_channel(config, seed)
    try:
        result, report = run_single(h, beta, config, spec.solver, seed, gamma,
                                    spec.zero_tol, spec.reliability_threshold)
    except (SolverAbort, FloatingPointError) as exc:
        return RunOutcome(gamma, run, seed, metrics.nan_report(config.n_users), None, str(exc))
    return RunOutcome(gamma, run, seed, report, result)


def sweep_reliability(spec: SweepSpec, run: int) -> np.ndarray:
    if spec.beta is not None:
        return np.asarray(spec.beta, dtype=float)
    seed = spec.base_seed + run if spec.redraw_reliability else spec.base_seed
    return model.generate_reliability(spec.config, seed)


def summarize(gamma: float, outcomes: list[RunOutcome]) -> dict:
    ok = [o.report for o in outcomes if o.ok]
    row = {"gamma": gamma, "n_ok": len(ok), "n_failed": len(outcomes) - len(ok)}
    if ok:
        agg = metrics.aggregate(ok)
        for name in METRIC_NAMES:
            row[f"{name}_mean"] = agg.mean[name]
            row[f"{name}_std"] = agg.std[name]
    else:
        for name in METRIC_NAMES:
            row[f"{name}_mean"] = row[f"{name}_std"] = math.nan
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepOutcome:
    """Solve every (gamma, run) pair, aggregate per gamma and write all files."""
    workers = default_workers() if workers is None else max(1, workers)
    betas = [sweep_reliability(spec, r) for r in range(spec.n_runs)]
    jobs = [(spec, g, r, betas[r]) for g in spec.gamma_values for r in range(spec.n_runs)]

    if workers == 1 or len(jobs) == 1:
        outcomes = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_job, jobs))

    for o in outcomes:
        if not o.ok:
            log.warning("gamma=%s run=%d aborted: %s", gamma_tag(o.gamma), o.run, o.error)

    summary = [summarize(g, [o for o in outcomes if o.gamma == g]) for g in spec.gamma_values]
    write_sweep(spec, summary, outcomes, betas[0])
    return SweepOutcome(summary, outcomes, betas[0])


SUMMARY_COLUMNS = ["gamma", "n_ok", "n_failed"] + [
    f"{name}_{stat}" for name in METRIC_NAMES for stat in ("mean", "std")
]
RUN_COLUMNS = ["gamma", "run", "seed", "status", "converged", "iterations",
               "se", "ri", "rl", "bmd", "pw", "error"]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_sweep(spec: SweepSpec, summary: list[dict], outcomes: list[RunOutcome],
                beta: np.ndarray) -> None:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS,
               ([row[c] for c in SUMMARY_COLUMNS] for row in summary))

    run_rows = []
    for o in outcomes:
        values = o.report.as_row()
        status = "ok" if o.ok else "aborted"
        converged = o.result.converged if o.ok else False
        iterations = o.result.iterations if o.ok else 0
        run_rows.append([o.gamma, o.run, o.seed, status, converged, iterations,
                         *(values[n] for n in METRIC_NAMES), o.error or ""])
        if o.ok:
            tag = f"g{gamma_tag(o.gamma)}_r{o.run}"
            emit_convergence_trace(o.result.trace, out / f"trace_{tag}.csv")
            emit_sparsity_pattern(o.result.w_final, spec.zero_tol, out / f"pattern_{tag}.csv")
    _write_csv(out / "runs.csv", RUN_COLUMNS, run_rows)

    emit_reliability_heatmap(beta, out / "reliability.csv")
    write_meta(out / "meta.json", {"sweep": spec.echo()}, spec.zero_tol, spec.reliability_threshold)


def write_meta(path: Path, payload: dict, zero_tol: float, reliability_threshold: float) -> None:
    meta = {
        "artifact": "beamsculpt",
        "version": __version__,
        **payload,
        "metric_definitions": metrics.DEFINITIONS,
        "zero_tol": zero_tol,
        "reliability_threshold": reliability_threshold,
        "pw_reporting": "final iterate",
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def emit_sparsity_pattern(w: np.ndarray, zero_tol: float, path) -> Path:
    """0/1 occupancy CSV, ``n_tx`` rows by ``n_users`` columns."""
    mask = metrics.active_mask(w, zero_tol).astype(int)
    path = Path(path)
    _write_csv(path, [f"user_{j}" for j in range(mask.shape[1])], mask.tolist())
    return path


def load_pattern(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).astype(int)


def emit_reliability_heatmap(beta: np.ndarray, path) -> Path:
    path = Path(path)
    _write_csv(path, [f"user_{j}" for j in range(beta.shape[1])], np.asarray(beta).tolist())
    return path


def trace_columns(n_users: int) -> list[str]:
    return (["iter", "objective", "se_bps_hz", "power", "eta", "backtracks", "primal_change"]
            + [f"lambda1_{j}" for j in range(n_users)]
            + [f"lambda2_{j}" for j in range(n_users)]
            + ["mu"])


def emit_convergence_trace(trace: IterateTrace, path) -> Path:
    path = Path(path)
    n_users = trace.rates.shape[1]
    se = trace.rates.mean(axis=1) / math.log(2.0)
    rows = (
        [k, trace.objective[k], se[k], trace.power[k], trace.eta[k], trace.backtracks[k],
         trace.primal_change[k], *trace.lambda1[k], *trace.lambda2[k], trace.mu[k]]
        for k in range(len(trace))
    )
    _write_csv(path, trace_columns(n_users), rows)
    return path
