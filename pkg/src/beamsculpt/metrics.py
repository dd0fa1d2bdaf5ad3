"""Performance metrics for a solved beamformer and their aggregation over runs.

SE is the per-user average of log2(1 + SINR); the per-user rate uses an
equal B/M share of the band, so ``ri_avg == se * B / M`` by construction.

RL and BMD use a *relative* zero test: an entry counts as off when its
modulus is at most ``zero_tol`` times the largest modulus in W.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import SystemConfig
from .objective import sinr_all

DEFAULT_ZERO_TOL = 1e-6
DEFAULT_RELIABILITY_THRESHOLD = 0.5

METRIC_NAMES = ("se", "ri", "rl", "bmd", "pw")

DEFINITIONS = {
    "se": "mean over users of log2(1 + SINR_j), bps/Hz",
    "ri": "se * bandwidth_hz / n_users, bit/s (uniform per-user band split)",
    "bmd": "100 * fraction of entries with |w_ij| > zero_tol * max|w|",
    "rl": "100 * fraction of unreliable connections (beta_ij < reliability_threshold) "
          "with |w_ij| <= zero_tol * max|w|; 100 if there are none. Artifact-defined.",
    "pw": "trace(W W^H) of the final iterate, watts",
}


def spectral_efficiency(w: np.ndarray, h: np.ndarray, config: SystemConfig) -> float:
    return float(np.mean(np.log2(1.0 + sinr_all(w, h, config.noise_variance))))


def active_mask(w: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    if not zero_tol > 0:
        raise ValueError("zero_tol must be positive")
    mag = np.abs(w)
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        return np.zeros(mag.shape, dtype=bool)
    return mag > zero_tol * peak


def beamforming_density(w: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL) -> float:
    return 100.0 * float(np.mean(active_mask(w, zero_tol)))


def reliability_score(w: np.ndarray, beta: np.ndarray, zero_tol: float = DEFAULT_ZERO_TOL,
                      reliability_threshold: float = DEFAULT_RELIABILITY_THRESHOLD) -> float:
    if not 0 < reliability_threshold < 1:
        raise ValueError("reliability_threshold must lie in (0, 1)")
    unreliable = beta < reliability_threshold
    n_unreliable = int(unreliable.sum())
    if n_unreliable == 0:
        return 100.0
    off = ~active_mask(w, zero_tol)
    return 100.0 * int((off & unreliable).sum()) / n_unreliable


def power_used(w: np.ndarray) -> float:
    return float(np.sum(w.real ** 2 + w.imag ** 2))


@dataclass(frozen=True)
class MetricsReport:
    se_bps_hz: float
    ri_bps: tuple[float, ...]
    ri_avg_bps: float
    rl_percent: float
    bmd_percent: float
    pw_watts: float

    def as_row(self) -> dict:
        return {"se": self.se_bps_hz, "ri": self.ri_avg_bps, "rl": self.rl_percent,
                "bmd": self.bmd_percent, "pw": self.pw_watts}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ri_bps"] = list(self.ri_bps)
        return d


def evaluate(w: np.ndarray, h: np.ndarray, beta: np.ndarray, config: SystemConfig,
             zero_tol: float = DEFAULT_ZERO_TOL,
             reliability_threshold: float = DEFAULT_RELIABILITY_THRESHOLD) -> MetricsReport:
    per_user_se = np.log2(1.0 + sinr_all(w, h, config.noise_variance))
    se = float(np.mean(per_user_se))
    share = config.user_bandwidth_hz
    return MetricsReport(
        se_bps_hz=se,
        ri_bps=tuple(float(v) for v in per_user_se * share),
        ri_avg_bps=se * share,
        rl_percent=reliability_score(w, beta, zero_tol, reliability_threshold),
        bmd_percent=beamforming_density(w, zero_tol),
        pw_watts=power_used(w),
    )


@dataclass(frozen=True)
class AggregateReport:
    n_runs: int
    mean: dict
    std: dict


def aggregate(reports: list[MetricsReport]) -> AggregateReport:
    """Sample mean and (n-1)-denominator std per metric; std is 0 for one run."""
    if not reports:
        raise ValueError("cannot aggregate an empty list of reports")
    rows = [r.as_row() for r in reports]
    n = len(rows)
    mean, std = {}, {}
    for name in METRIC_NAMES:
        values = np.array([row[name] for row in rows], dtype=float)
        mean[name] = float(values.mean())
        std[name] = float(values.std(ddof=1)) if n > 1 else 0.0
    return AggregateReport(n, mean, std)


def nan_report(n_users: int) -> MetricsReport:
    nan = math.nan
    return MetricsReport(nan, (nan,) * n_users, nan, nan, nan, nan)
