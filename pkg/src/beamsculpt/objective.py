"""SINR, rates and the smooth (dual-weighted) part of the Lagrangian.

Gradient convention: for a real function F of a complex matrix W, the
gradient returned here is ``dF/dRe(W) + 1j * dF/dIm(W)``. With this
convention the power term ``-mu * ||W||_F^2`` has gradient ``-2 mu W`` and
the first-order change of F along a direction D is ``Re <G, D>``, so an
ascent step is simply ``W + eta * G``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemConfig


@dataclass(frozen=True)
class DualState:
    """Multipliers: ``lambda1`` (min-rate), ``lambda2`` and ``mu`` (power)."""

    lambda1: np.ndarray
    lambda2: np.ndarray
    mu: float

    @classmethod
    def constant(cls, n_users: int, lambda1: float = 0.0, lambda2: float = 0.0,
                 mu: float = 0.0) -> "DualState":
        return cls(np.full(n_users, float(lambda1)), np.full(n_users, float(lambda2)), float(mu))

    @classmethod
    def zeros(cls, n_users: int) -> "DualState":
        return cls.constant(n_users)

    def effective_weights(self, fairness: np.ndarray) -> np.ndarray:
        """Per-user weight on ln(1 + SINR): rho_j + lambda1_j - lambda2_j."""
        return fairness + self.lambda1 - self.lambda2

    def is_nonnegative(self) -> bool:
        return bool(np.all(self.lambda1 >= 0) and np.all(self.lambda2 >= 0) and self.mu >= 0)


def _gains(w: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``|h_m^H w_j|^2`` indexed ``[m, j]``."""
    if w.shape != h.shape:
        raise ValueError(f"beamformer shape {w.shape} does not match channel shape {h.shape}")
    a = h.conj().T @ w
    return a.real ** 2 + a.imag ** 2


def sinr_all(w: np.ndarray, h: np.ndarray, noise_variance: float) -> np.ndarray:
    g = _gains(w, h)
    signal = np.diag(g)
    interference = g.sum(axis=1) - signal
    return signal / (interference + noise_variance)


def sinr(w: np.ndarray, h: np.ndarray, noise_variance: float, m: int) -> float:
    n_users = h.shape[1]
    if not 0 <= m < n_users:
        raise IndexError(f"user index {m} out of range for {n_users} users")
    return float(sinr_all(w, h, noise_variance)[m])


def rates_nats(w: np.ndarray, h: np.ndarray, noise_variance: float) -> np.ndarray:
    return np.log1p(sinr_all(w, h, noise_variance))


def user_rate_nats(w: np.ndarray, h: np.ndarray, noise_variance: float, m: int) -> float:
    return float(np.log1p(sinr(w, h, noise_variance, m)))


def power(w: np.ndarray) -> float:
    return float(np.vdot(w, w).real)


def smooth_value(w: np.ndarray, h: np.ndarray, config: SystemConfig, duals: DualState) -> float:
    """``sum_j omega_j ln(1 + sinr_j) - mu (||W||^2 - P_t)``.

    The constant ``-lambda1 . R_min`` is left out; it does not depend on W.
    """
    omega = duals.effective_weights(config.fairness)
    r = rates_nats(w, h, config.noise_variance)
    return float(omega @ r - duals.mu * (power(w) - config.power_budget))


def smooth_gradient(w: np.ndarray, h: np.ndarray, config: SystemConfig,
                    duals: DualState) -> np.ndarray:
    """Analytic ascent direction of :func:`smooth_value`.

    Writing ``T_m = sum_j |h_m^H w_j|^2 + s2`` and ``I_m = T_m - |h_m^H w_m|^2``,
    ``ln(1 + sinr_m) = ln T_m - ln I_m``. Both are log-quadratics in W, so

        G[:, i] = sum_m 2 omega_m h_m (h_m^H w_i) (1/T_m - [i != m]/I_m) - 2 mu w_i.

    The ``i != m`` coefficient ``1/T_m - 1/I_m`` is negative: more leakage
    toward user m lowers that user's SINR.
    """
    a = h.conj().T @ w
    g = a.real ** 2 + a.imag ** 2
    total = g.sum(axis=1) + config.noise_variance
    interference = total - np.diag(g)
    omega = duals.effective_weights(config.fairness)

    coeff = np.repeat((1.0 / total)[:, None], w.shape[1], axis=1)
    coeff -= (1.0 / interference)[:, None]
    np.fill_diagonal(coeff, 1.0 / total)
    coeff *= omega[:, None]
    return 2.0 * (h @ (coeff * a)) - 2.0 * duals.mu * w


def constraint_residuals(w: np.ndarray, h: np.ndarray, config: SystemConfig):
    """Return ``(rate_slack, power_slack)``; nonnegative slack means satisfied.

    ``rate_slack`` is in nats per channel use.
    """
    rate_slack = rates_nats(w, h, config.noise_variance) - config.min_rate_nats
    return rate_slack, config.power_budget - power(w)
