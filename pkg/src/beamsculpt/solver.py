"""Proximal-gradient dual ascent for reliability-aware sparse beamforming.

Each outer iteration takes one backtracked proximal-gradient ascent step on
the dual-weighted Lagrangian, then one projected subgradient step on the
multipliers evaluated at the new beamformer.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import model
from .model import SystemConfig
from .objective import DualState, power, rates_nats, smooth_gradient, smooth_value
from .prox import PenaltyParams, penalty_value, prox_step

log = logging.getLogger(__name__)


class SolverAbort(RuntimeError):
    """Raised when an iterate or gradient stops being finite."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverParams:
    eta_x_init: float = 0.025
    dual_step: float = 0.025
    backtrack_shrink: float = 0.5
    max_iters: int = 3000
    max_backtracks: int = 50
    tolerance: float = 1e-12
    lambda1_init: float = 0.04
    lambda2_init: float = 0.06
    mu_init: float = 0.05
    enable_lambda2: bool = True
    freeze_duals: bool = False
    # Trace rows whose beamformer is kept (plus row 0 and the final row).
    snapshot_every: int = 500

    def __post_init__(self):
        if not (self.eta_x_init > 0 and self.dual_step > 0):
            raise ValueError("step sizes must be positive")
        if not 0 < self.backtrack_shrink < 1:
            raise ValueError("backtrack_shrink must lie in (0, 1)")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("max_iters and max_backtracks must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if min(self.lambda1_init, self.lambda2_init, self.mu_init) < 0:
            raise ValueError("initial multipliers must be >= 0")

    def initial_duals(self, n_users: int) -> DualState:
        lambda2 = self.lambda2_init if self.enable_lambda2 else 0.0
        return DualState.constant(n_users, self.lambda1_init, lambda2, self.mu_init)


@dataclass
class IterateTrace:
    """Per-iteration record. Row ``k`` describes the iterate after outer step ``k``."""

    objective: np.ndarray
    smooth: np.ndarray
    penalty: np.ndarray
    rates: np.ndarray  # (iters, n_users), nats
    power: np.ndarray
    lambda1: np.ndarray  # (iters, n_users), after the dual update
    lambda2: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    backtracks: np.ndarray
    line_search_failed: np.ndarray
    primal_change: np.ndarray
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def allocate(cls, n_iters: int, n_users: int) -> "IterateTrace":
        z = lambda *shape: np.zeros(shape)  # noqa: E731
        return cls(z(n_iters), z(n_iters), z(n_iters), z(n_iters, n_users), z(n_iters),
                   z(n_iters, n_users), z(n_iters, n_users), z(n_iters), z(n_iters),
                   np.zeros(n_iters, dtype=int), np.zeros(n_iters, dtype=bool), z(n_iters))

    def truncate(self, n: int) -> "IterateTrace":
        return IterateTrace(*(getattr(self, name)[:n] for name in (
            "objective", "smooth", "penalty", "rates", "power", "lambda1", "lambda2",
            "mu", "eta", "backtracks", "line_search_failed", "primal_change")),
            snapshots=self.snapshots)

    def __len__(self) -> int:
        return len(self.objective)


@dataclass
class SolveResult:
    w_final: np.ndarray
    duals_final: DualState
    trace: IterateTrace
    converged: bool
    iterations: int
    # Multipliers and step that produced the last primal step.
    duals_last_step: DualState
    eta_last_step: float


class PrimalStep(NamedTuple):
    w: np.ndarray
    eta: float
    backtracks: int
    line_search_failed: bool


def initialize_primal(config: SystemConfig, seed: int) -> np.ndarray:
    return model.initial_beamformer(config, seed)


def primal_update(w: np.ndarray, duals: DualState, h: np.ndarray, penalty: PenaltyParams,
                  config: SystemConfig, params: SolverParams) -> PrimalStep:
    """One backtracked proximal-gradient ascent step.

    The trial ``z = prox(w + eta G, eta)`` is accepted once the smooth part
    clears its quadratic lower model around ``w``:
    ``F(z) >= F(w) + Re<G, z - w> - ||z - w||^2 / (2 eta)``.
    """
    grad = smooth_gradient(w, h, config, duals)
    if not np.all(np.isfinite(grad)):
        raise SolverAbort("non-finite gradient")
    f_w = smooth_value(w, h, config, duals)
    slack = 1e-12 * (1.0 + abs(f_w))  # absorbs roundoff once steps become tiny

    eta = params.eta_x_init
    for backtracks in range(params.max_backtracks + 1):
        z = prox_step(w + eta * grad, eta, penalty)
        d = z - w
        model_value = f_w + np.vdot(grad, d).real - np.vdot(d, d).real / (2.0 * eta)
        if smooth_value(z, h, config, duals) >= model_value - slack:
            return PrimalStep(z, eta, backtracks, False)
        if backtracks < params.max_backtracks:
            eta *= params.backtrack_shrink
    log.debug("line search hit max_backtracks=%d; accepting last trial", params.max_backtracks)
    return PrimalStep(z, eta, params.max_backtracks, True)


def dual_update(duals: DualState, rates: np.ndarray, power_used: float, config: SystemConfig,
                params: SolverParams) -> DualState:
    """Projected subgradient step on the multipliers (signs chosen for ascent on violation)."""
    if params.freeze_duals:
        return duals
    a = params.dual_step
    lambda1 = np.maximum(0.0, duals.lambda1 + a * (config.min_rate_nats - rates))
    if params.enable_lambda2:
        lambda2 = np.maximum(0.0, duals.lambda2 - a * rates)
    else:
        lambda2 = np.zeros_like(duals.lambda2)
    mu = max(0.0, duals.mu + a * (power_used - config.power_budget))
    return DualState(lambda1, lambda2, mu)


def solve(h: np.ndarray, beta: np.ndarray, config: SystemConfig, params: SolverParams,
          seed: int, sparsity_weight: float = 0.0, w_init: np.ndarray | None = None) -> SolveResult:
    shape = (config.n_tx, config.n_users)
    model.check_matrix("channel", h, shape)
    if beta.shape != shape:
        raise ValueError(f"reliability shape {beta.shape} does not match {shape}")
    penalty = PenaltyParams(sparsity_weight, beta)

    w = initialize_primal(config, seed) if w_init is None else np.array(w_init, dtype=complex)
    duals = params.initial_duals(config.n_users)
    trace = IterateTrace.allocate(params.max_iters, config.n_users)
    converged = False
    k = 0
    duals_step, eta_step = duals, params.eta_x_init

    for k in range(params.max_iters):
        try:
            step = primal_update(w, duals, h, penalty, config, params)
        except SolverAbort as exc:
            raise SolverAbort(str(exc), k) from None
        if not np.all(np.isfinite(step.w)):
            raise SolverAbort("non-finite iterate", k)

        change = float(np.linalg.norm(step.w - w))
        duals_step, eta_step = duals, step.eta
        w = step.w
        r = rates_nats(w, h, config.noise_variance)
        p = power(w)
        duals = dual_update(duals, r, p, config, params)

        pen = penalty_value(w, penalty)
        trace.objective[k] = config.fairness @ r - pen
        trace.smooth[k] = smooth_value(w, h, config, duals_step)
        trace.penalty[k] = pen
        trace.rates[k] = r
        trace.power[k] = p
        trace.lambda1[k] = duals.lambda1
        trace.lambda2[k] = duals.lambda2
        trace.mu[k] = duals.mu
        trace.eta[k] = step.eta
        trace.backtracks[k] = step.backtracks
        trace.line_search_failed[k] = step.line_search_failed
        trace.primal_change[k] = change
        if k % params.snapshot_every == 0:
            trace.snapshots[k] = w.copy()

        if change < params.tolerance:
            converged = True
            break

    iterations = k + 1
    trace = trace.truncate(iterations)
    trace.snapshots[iterations - 1] = w.copy()
    return SolveResult(w, duals, trace, converged, iterations, duals_step, eta_step)


def prox_fixed_point_residual(result: SolveResult, h: np.ndarray, beta: np.ndarray,
                              config: SystemConfig, sparsity_weight: float) -> float:
    """``||w - prox(w + eta G(w), eta)||_F`` at the final iterate."""
    w = result.w_final
    eta = result.eta_last_step
    grad = smooth_gradient(w, h, config, result.duals_last_step)
    z = prox_step(w + eta * grad, eta, PenaltyParams(sparsity_weight, beta))
    return float(np.linalg.norm(w - z))
