"""Reliability-weighted l1 penalty and its proximal map (complex soft thresholding)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PenaltyParams:
    sparsity_weight: float
    beta: np.ndarray

    def __post_init__(self):
        if not self.sparsity_weight >= 0:
            raise ValueError(f"sparsity_weight must be >= 0, got {self.sparsity_weight!r}")

    def thresholds(self, step: float) -> np.ndarray:
        """Per-entry soft-threshold level for a given step size."""
        return step * self.sparsity_weight * (1.0 - self.beta)


def penalty_value(w: np.ndarray, params: PenaltyParams) -> float:
    if w.shape != params.beta.shape:
        raise ValueError(f"beamformer shape {w.shape} does not match reliability shape {params.beta.shape}")
    return float(params.sparsity_weight * np.sum((1.0 - params.beta) * np.abs(w)))


def soft_threshold(x: np.ndarray, kappa) -> np.ndarray:
    """Shrink each entry's modulus by ``kappa``, keeping its phase.

    Entries with ``|x| <= kappa`` map to exactly zero. On the real line this is
    the familiar ``sign(x) * max(|x| - kappa, 0)``.
    """
    x = np.asarray(x)
    mag = np.abs(x)
    kappa = np.broadcast_to(kappa, mag.shape)
    keep = mag > kappa
    scale = np.zeros(mag.shape)
    np.subtract(1.0, np.divide(kappa, mag, where=keep, out=np.zeros(mag.shape)), where=keep, out=scale)
    return x * scale


def prox_step(x: np.ndarray, step: float, params: PenaltyParams) -> np.ndarray:
    """Prox of ``step * penalty`` evaluated at ``x``."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    return soft_threshold(x, params.thresholds(step))
