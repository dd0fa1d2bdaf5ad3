"""Reliability-aware sparse multi-user beamforming via proximal-gradient dual ascent."""

__version__ = "0.1.0"

from .model import SystemConfig, generate_channel, generate_reliability, load_config  # noqa: E402
from .objective import DualState, smooth_gradient, smooth_value, sinr  # noqa: E402
from .prox import PenaltyParams, penalty_value, prox_step  # noqa: E402
from .solver import SolveResult, SolverAbort, SolverParams, solve  # noqa: E402

__all__ = [
    "SystemConfig", "generate_channel", "generate_reliability", "load_config",
    "DualState", "smooth_gradient", "smooth_value", "sinr",
    "PenaltyParams", "penalty_value", "prox_step",
    "SolveResult", "SolverAbort", "SolverParams", "solve",
]
