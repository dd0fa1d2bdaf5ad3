"""Independent checks: finite-difference gradients, brute-force prox, MRT optimum.

Nothing here reuses the analytic gradient or the closed-form prox, so the
checks stay independent of the code they validate.

Brute-force prox: the scalar objective ``kappa |z| + |z - x|^2 / 2`` does not
change when z and x are rotated by the same phase, and for fixed |z| the
quadratic term is smallest when z is aligned with x. So the minimiser lies on
the segment from 0 to x, and a 1-D search over ``t = |z|`` in ``[0, |x|]``
suffices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import SystemConfig
from .objective import DualState, smooth_gradient, smooth_value
from .prox import soft_threshold


@dataclass(frozen=True)
class GradCheckReport:
    max_abs_error: float
    max_rel_error: float
    worst_coordinate: tuple[int, int, str]
    fd_step: float

    def format(self) -> str:
        i, j, part = self.worst_coordinate
        return (f"max_abs_error={self.max_abs_error:.3e} max_rel_error={self.max_rel_error:.3e} "
                f"worst=({i}, {j}, {part}) fd_step={self.fd_step:g}")


def fd_gradient(w: np.ndarray, h: np.ndarray, config: SystemConfig, duals: DualState,
                step: float = 1e-6) -> np.ndarray:
    """Central differences of ``smooth_value`` over every real and imaginary part."""
    if not 1e-8 <= step <= 1e-3:
        raise ValueError("fd step must lie in [1e-8, 1e-3]")
    return _central_differences(w, h, config, duals, step)


def _central_differences(w, h, config, duals, step):
    w = np.array(w, dtype=complex)
    grad = np.zeros(w.shape, dtype=complex)
    for idx in np.ndindex(w.shape):
        for unit in (1.0, 1j):
            plus, minus = w.copy(), w.copy()
            plus[idx] += unit * step
            minus[idx] -= unit * step
            fp = smooth_value(plus, h, config, duals)
            fm = smooth_value(minus, h, config, duals)
            if not (math.isfinite(fp) and math.isfinite(fm)):
                raise FloatingPointError(f"non-finite objective near coordinate {idx}")
            grad[idx] += unit * (fp - fm) / (2.0 * step)
    return grad


def gradient_check(w, h, config, duals, step: float = 1e-6) -> GradCheckReport:
    """Compare the analytic gradient with central differences.

    Relative error is the worst coordinate error over ``||G||_F + 1e-12``.
    Steps outside the ``fd_gradient`` range are allowed here so that large
    steps can demonstrate truncation error.
    """
    analytic = smooth_gradient(w, h, config, duals)
    numeric = _central_differences(w, h, config, duals, step)
    err = np.stack([np.abs(analytic.real - numeric.real), np.abs(analytic.imag - numeric.imag)], axis=-1)
    worst = np.unravel_index(int(np.argmax(err)), err.shape)
    max_abs = float(err.max())
    return GradCheckReport(
        max_abs_error=max_abs,
        max_rel_error=max_abs / (float(np.linalg.norm(analytic)) + 1e-12),
        worst_coordinate=(int(worst[0]), int(worst[1]), ("real", "imag")[worst[2]]),
        fd_step=step,
    )


def random_gradcheck_instance(rng: np.random.Generator, n_tx: int, n_users: int):
    """W, H with real/imag parts in [-2, 2], random nonnegative duals and weights."""
    def cplx():
        return rng.uniform(-2, 2, (n_tx, n_users)) + 1j * rng.uniform(-2, 2, (n_tx, n_users))

    w, h = cplx(), cplx()
    config = SystemConfig(n_tx=n_tx, n_users=n_users, power_budget=float(rng.uniform(0.5, 10)),
                          noise_variance=float(rng.uniform(0.1, 2)),
                          fairness_weights=tuple(rng.uniform(0.5, 2, n_users)))
    duals = DualState(rng.uniform(0, 1, n_users), rng.uniform(0, 1, n_users), float(rng.uniform(0, 1)))
    return w, h, config, duals


def brute_force_prox_scalar(x: complex, kappa: float) -> complex:
    """Minimise ``kappa |z| + |z - x|^2 / 2`` by radial grid search plus refinement."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    r = abs(x)
    if r == 0.0:
        return 0j
    if kappa == 0.0:
        return complex(x)

    def objective(t):
        return kappa * t + 0.5 * (r - t) ** 2

    dt = 1e-4 * r
    grid = np.linspace(0.0, r, int(round(r / dt)) + 1)
    values = objective(grid)
    k = int(np.argmin(values))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    candidates = [0.0, r, grid[k]]
    if hi > lo:
        refined = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
        candidates.append(float(refined.x))
    t = min(candidates, key=objective)
    return complex(x) / r * t


def single_user_optimum(h_vec: np.ndarray, power_budget: float, noise_variance: float):
    """Maximum-ratio transmission: ``w* = sqrt(P) h / ||h||``, rate ``ln(1 + P ||h||^2 / s2)``."""
    h_vec = np.asarray(h_vec).reshape(-1)
    norm = float(np.linalg.norm(h_vec))
    if norm == 0.0:
        raise ValueError("single-user optimum undefined for a zero channel")
    w_star = math.sqrt(power_budget) * h_vec / norm
    return w_star, math.log1p(power_budget * norm ** 2 / noise_variance)


@dataclass(frozen=True)
class ProxCheckReport:
    samples: int
    max_deviation: float
    kappa_zero_samples: int
    kappa_zero_exact: bool

    def format(self) -> str:
        return (f"samples={self.samples} max_deviation={self.max_deviation:.3e} "
                f"kappa_zero_samples={self.kappa_zero_samples} "
                f"kappa_zero_identity={'exact' if self.kappa_zero_exact else 'MISMATCH'}")


def prox_check(samples: int, seed: int = 0) -> ProxCheckReport:
    """Closed-form complex soft threshold against the radial brute force.

    Every tenth sample uses ``kappa = 0`` to exercise the identity case.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-2, 2, samples) + 1j * rng.uniform(-2, 2, samples)
    kappas = rng.uniform(0, 2, samples)
    kappas[::10] = 0.0

    closed = soft_threshold(xs, kappas)
    brute = np.array([brute_force_prox_scalar(x, k) for x, k in zip(xs, kappas)])
    zero = kappas == 0.0
    return ProxCheckReport(
        samples=samples,
        max_deviation=float(np.max(np.abs(closed - brute))),
        kappa_zero_samples=int(zero.sum()),
        kappa_zero_exact=bool(np.array_equal(closed[zero], xs[zero])),
    )
