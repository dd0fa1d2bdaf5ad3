"""Command-line entry point.

Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 solver abort,
4 failed check. Flags override config-file values, which override defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, harness, metrics, model, oracle
from .model import ConfigError, SystemConfig
from .solver import SolverAbort, SolverParams

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3, 4

GRAD_TOLERANCE = 1e-5
PROX_TOLERANCE = 5e-4


def _gamma_list(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("need at least one gamma value")
    return values


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON scenario file (defaults: 64x4 reference setup)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--ntx", type=int, help="override n_tx")
    p.add_argument("--users", type=int, help="override n_users")
    p.add_argument("--noise-variance", type=float, help="override noise_variance")
    p.add_argument("--power-budget", type=float, help="override power_budget")
    p.add_argument("--max-iters", type=int, help="override solver max_iters (default 3000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamsculpt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario at one sparsity weight")
    _scenario_flags(p)
    p.add_argument("--gamma", type=float, default=0.0, help="sparsity weight")

    p = sub.add_parser("sweep", help="multi-run sweep over sparsity weights")
    _scenario_flags(p)
    p.add_argument("--gammas", type=_gamma_list, default=list(harness.DEFAULT_GAMMAS))
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--workers", type=int,
                   help=f"parallel processes (default: ${harness.THREADS_ENV} or CPU count)")
    p.add_argument("--redraw-reliability", action="store_true",
                   help="draw a fresh reliability matrix for every run")

    p = sub.add_parser("gradcheck", help="analytic gradient vs central finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ntx", type=int, default=8)
    p.add_argument("--users", type=int, default=3)
    p.add_argument("--step", type=float, default=1e-6)

    p = sub.add_parser("proxcheck", help="closed-form prox vs brute-force minimisation")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    sub.add_parser("version", help="print the version")
    return parser


def _scenario(args) -> tuple[SystemConfig, SolverParams]:
    config = model.load_config(args.config) if args.config else SystemConfig()
    overrides = {}
    for flag, key in (("ntx", "n_tx"), ("users", "n_users"),
                      ("noise_variance", "noise_variance"), ("power_budget", "power_budget")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if overrides:
        config = config.replace(**overrides)
    params = SolverParams()
    if args.max_iters is not None:
        if args.max_iters < 1:
            raise ConfigError("--max-iters must be >= 1")
        params = SolverParams(max_iters=args.max_iters)
    if args.seed < 0:
        raise ConfigError("--seed must be >= 0")
    return config, params


def cmd_solve(args) -> int:
    config, params = _scenario(args)
    if not args.gamma >= 0:
        raise ConfigError("--gamma must be >= 0")
    beta = model.generate_reliability(config, args.seed)
    h = model.generate_channel(config, args.seed)
    result, report = harness.run_single(h, beta, config, params, args.seed, args.gamma)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    harness.emit_convergence_trace(result.trace, out / "trace.csv")
    harness.emit_sparsity_pattern(result.w_final, metrics.DEFAULT_ZERO_TOL, out / "pattern.csv")
    harness.emit_reliability_heatmap(beta, out / "reliability.csv")
    payload = {
        "gamma": args.gamma,
        "seed": args.seed,
        "converged": result.converged,
        "iterations": result.iterations,
        **report.to_dict(),
    }
    (out / "metrics.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    harness.write_meta(out / "meta.json",
                       {"solve": {"config": config.to_dict(), "gamma": args.gamma, "seed": args.seed}},
                       metrics.DEFAULT_ZERO_TOL, metrics.DEFAULT_RELIABILITY_THRESHOLD)

    print(f"gamma={args.gamma:g} seed={args.seed} converged={result.converged} "
          f"iterations={result.iterations}")
    print(f"SE={report.se_bps_hz:.4f} bps/Hz  Ri={report.ri_avg_bps / 1e9:.4f} Gbps  "
          f"RL={report.rl_percent:.4f}%  BMD={report.bmd_percent:.4f}%  PW={report.pw_watts:.4f} W")
    return EXIT_OK


def format_summary(rows: list[dict]) -> str:
    header = f"{'gamma':>10} {'SE':>8} {'Ri(Gbps)':>9} {'RL(%)':>9} {'BMD(%)':>18} {'PW(W)':>20} {'ok':>4}"
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['gamma']:>10.4f} {r['se_mean']:>8.4f} {r['ri_mean'] / 1e9:>9.4f} {r['rl_mean']:>9.4f} "
            f"{r['bmd_mean']:>9.4f} ± {r['bmd_std']:<6.4f} {r['pw_mean']:>10.4f} ± {r['pw_std']:<7.4f}"
            f" {r['n_ok']:>4d}"
        )
    return "\n".join(lines)


def cmd_sweep(args) -> int:
    config, params = _scenario(args)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    if any(not g >= 0 for g in args.gammas):
        raise ConfigError("--gammas values must be >= 0")
    spec = harness.SweepSpec(gamma_values=args.gammas, n_runs=args.runs, base_seed=args.seed,
                             config=config, solver=params, output_dir=args.out,
                             redraw_reliability=args.redraw_reliability)
    outcome = harness.run_sweep(spec, workers=args.workers)
    print(format_summary(outcome.summary))
    for o in outcome.runs:
        if not o.ok:
            print(f"run failed: gamma={o.gamma:g} run={o.run}: {o.error}", file=sys.stderr)
    if any(row["n_ok"] == 0 for row in outcome.summary):
        return EXIT_SOLVER
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if args.ntx < 1 or args.users < 1 or args.ntx < args.users:
        raise ConfigError("--ntx and --users must be >= 1 with ntx >= users")
    if not args.step > 0:
        raise ConfigError("--step must be positive")
    rng = np.random.default_rng(args.seed)
    w, h, config, duals = oracle.random_gradcheck_instance(rng, args.ntx, args.users)
    report = oracle.gradient_check(w, h, config, duals, args.step)
    passed = report.max_rel_error < GRAD_TOLERANCE
    print(report.format())
    print(f"gradcheck {'PASS' if passed else 'FAIL'} (tolerance {GRAD_TOLERANCE:g})")
    return EXIT_OK if passed else EXIT_CHECK


def cmd_proxcheck(args) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    report = oracle.prox_check(args.samples, args.seed)
    passed = report.max_deviation < PROX_TOLERANCE and report.kappa_zero_exact
    print(report.format())
    print(f"proxcheck {'PASS' if passed else 'FAIL'} (tolerance {PROX_TOLERANCE:g})")
    return EXIT_OK if passed else EXIT_CHECK


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "gradcheck": cmd_gradcheck,
    "proxcheck": cmd_proxcheck,
    "version": lambda args: print(f"beamsculpt {__version__}") or EXIT_OK,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbort as exc:
        print(f"solver aborted: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
