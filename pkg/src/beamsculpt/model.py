"""Scenario configuration and seeded generators for channels and reliability.

Channels, beamformers and reliability matrices are plain numpy arrays of
shape ``(n_tx, n_users)``; column ``j`` always belongs to user ``j``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

PER_ANTENNA_UNIFORM = "per_antenna_uniform"
FROM_FILE = "from_file"
RELIABILITY_SCHEMES = (PER_ANTENNA_UNIFORM, FROM_FILE)

# Distinct stream tags so one integer seed never feeds two generators the same bits.
_CHANNEL_STREAM = 0xC4A1
_RELIABILITY_STREAM = 0xBE7A
_INIT_STREAM = 0x1417


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


@dataclass(frozen=True)
class SystemConfig:
    """Physical scenario. Defaults reproduce the 64-antenna, 4-user setup."""

    n_tx: int = 64
    n_users: int = 4
    bandwidth_hz: float = 3e9
    power_budget: float = 2000.0
    noise_variance: float = 1.0
    min_rate_bps: tuple[float, ...] = ()
    fairness_weights: tuple[float, ...] = ()
    reliability_scheme: str = PER_ANTENNA_UNIFORM
    reliability_path: str | None = None

    def __post_init__(self):
        if not isinstance(self.n_users, (int, np.integer)) or self.n_users < 1:
            raise ConfigError(f"n_users must be a positive integer, got {self.n_users!r}")
        if not isinstance(self.n_tx, (int, np.integer)) or self.n_tx < self.n_users:
            raise ConfigError(f"n_tx must be an integer >= n_users, got {self.n_tx!r}")
        for key in ("bandwidth_hz", "power_budget", "noise_variance"):
            value = getattr(self, key)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{key} must be a positive finite number, got {value!r}")

        # Empty tuples mean "use the default for every user".
        if not self.min_rate_bps:
            object.__setattr__(self, "min_rate_bps", (1e8,) * self.n_users)
        if not self.fairness_weights:
            object.__setattr__(self, "fairness_weights", (1.0,) * self.n_users)
        object.__setattr__(self, "min_rate_bps", tuple(float(v) for v in self.min_rate_bps))
        object.__setattr__(self, "fairness_weights", tuple(float(v) for v in self.fairness_weights))

        if len(self.min_rate_bps) != self.n_users:
            raise ConfigError(f"min_rate_bps must have {self.n_users} entries")
        if any(not math.isfinite(v) or v < 0 for v in self.min_rate_bps):
            raise ConfigError("min_rate_bps entries must be finite and >= 0")
        if len(self.fairness_weights) != self.n_users:
            raise ConfigError(f"fairness_weights must have {self.n_users} entries")
        if any(not math.isfinite(v) or v <= 0 for v in self.fairness_weights):
            raise ConfigError("fairness_weights entries must be finite and > 0")
        if self.reliability_scheme not in RELIABILITY_SCHEMES:
            raise ConfigError(
                f"reliability.scheme must be one of {RELIABILITY_SCHEMES}, "
                f"got {self.reliability_scheme!r}"
            )
        if self.reliability_scheme == FROM_FILE and not self.reliability_path:
            raise ConfigError("reliability.path is required when reliability.scheme is from_file")

    @property
    def user_bandwidth_hz(self) -> float:
        """Per-user share of the band (uniform split)."""
        return self.bandwidth_hz / self.n_users

    @property
    def fairness(self) -> np.ndarray:
        return np.asarray(self.fairness_weights, dtype=float)

    @property
    def min_rate_nats(self) -> np.ndarray:
        """Minimum rates converted from bit/s to nats per channel use."""
        return np.asarray(self.min_rate_bps) / self.user_bandwidth_hz * math.log(2.0)

    def to_dict(self) -> dict:
        return {
            "n_tx": self.n_tx,
            "n_users": self.n_users,
            "bandwidth_hz": self.bandwidth_hz,
            "power_budget": self.power_budget,
            "noise_variance": self.noise_variance,
            "min_rate_bps": list(self.min_rate_bps),
            "fairness_weights": list(self.fairness_weights),
            "reliability": {"scheme": self.reliability_scheme, "path": self.reliability_path},
        }

    def replace(self, **changes) -> "SystemConfig":
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        if "n_users" in changes and changes["n_users"] != self.n_users:
            # Per-user vectors no longer fit; fall back to defaults unless given.
            current["min_rate_bps"] = ()
            current["fairness_weights"] = ()
        current.update(changes)
        return SystemConfig(**current)


_TOP_LEVEL_KEYS = {
    "n_tx", "n_users", "bandwidth_hz", "power_budget", "noise_variance",
    "min_rate_bps", "fairness_weights", "reliability",
}
_RELIABILITY_KEYS = {"scheme", "path"}


def config_from_dict(data: dict, base_dir: Path | None = None) -> SystemConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    kwargs = {}
    for key in ("n_tx", "n_users"):
        if key in data:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer, got {value!r}")
            kwargs[key] = value
    for key in ("bandwidth_hz", "power_budget", "noise_variance"):
        if key in data:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            kwargs[key] = float(value)

    n_users = kwargs.get("n_users", SystemConfig.n_users)
    for key in ("min_rate_bps", "fairness_weights"):
        if key in data:
            value = data[key]
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                value = [value] * n_users
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                raise ConfigError(f"{key} must be a number or a list of numbers")
            kwargs[key] = tuple(float(v) for v in value)

    rel = data.get("reliability", {})
    if rel is not None:
        if not isinstance(rel, dict):
            raise ConfigError("reliability must be an object with keys scheme, path")
        unknown = set(rel) - _RELIABILITY_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join('reliability.' + k for k in sorted(unknown))}")
        if "scheme" in rel:
            kwargs["reliability_scheme"] = rel["scheme"]
        if rel.get("path") is not None:
            path = Path(rel["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            kwargs["reliability_path"] = str(path)

    return SystemConfig(**kwargs)


def load_config(path) -> SystemConfig:
    """Read a flat JSON scenario file; missing keys take the documented defaults."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)


def generate_channel(config: SystemConfig, seed: int) -> np.ndarray:
    """I.i.d. CN(0, 1) Rayleigh channel, shape ``(n_tx, n_users)``."""
    rng = rng_for(seed, _CHANNEL_STREAM)
    shape = (config.n_tx, config.n_users)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def reliability_from_antennas(per_antenna, n_users: int) -> np.ndarray:
    per_antenna = np.asarray(per_antenna, dtype=float).reshape(-1, 1)
    return np.repeat(per_antenna, n_users, axis=1)


def generate_reliability(config: SystemConfig, seed: int, scheme: str | None = None,
                         path=None) -> np.ndarray:
    """Reliability matrix with entries in [0, 1].

    ``per_antenna_uniform`` draws one Uniform[0, 1] score per antenna and copies
    it across all user columns. ``from_file`` reads a CSV (see
    :func:`load_reliability`); ``path`` defaults to ``config.reliability_path``.
    """
    scheme = scheme or config.reliability_scheme
    if scheme == PER_ANTENNA_UNIFORM:
        rng = rng_for(seed, _RELIABILITY_STREAM)
        return reliability_from_antennas(rng.uniform(0.0, 1.0, config.n_tx), config.n_users)
    if scheme == FROM_FILE:
        path = path or config.reliability_path
        if path is None:
            raise ConfigError("from_file reliability scheme needs a path")
        return load_reliability(path, config.n_tx, config.n_users)
    raise ConfigError(f"unknown reliability scheme {scheme!r}")


def _read_numeric_csv(path: Path) -> np.ndarray:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read reliability file {path}: {exc.strerror or exc}") from exc
    rows = [ln for ln in lines if ln.strip()]
    if not rows:
        raise ConfigError(f"reliability file {path} is empty")

    def parse(line):
        return [float(tok) for tok in line.split(",")]

    # An optional header line is allowed.
    try:
        parse(rows[0])
    except ValueError:
        rows = rows[1:]
    try:
        table = [parse(row) for row in rows]
    except ValueError as exc:
        raise ConfigError(f"malformed reliability file {path}: {exc}") from exc
    if not table or len({len(r) for r in table}) != 1:
        raise ConfigError(f"malformed reliability file {path}: ragged or empty rows")
    return np.array(table, dtype=float)


def load_reliability(path, n_tx: int, n_users: int) -> np.ndarray:
    """Load a reliability CSV: ``n_tx x n_users`` values, or one column per antenna."""
    path = Path(path)
    beta = _read_numeric_csv(path)
    if beta.shape == (n_tx, 1) and n_users != 1:
        beta = reliability_from_antennas(beta[:, 0], n_users)
    if beta.shape != (n_tx, n_users):
        raise ConfigError(
            f"reliability file {path} has shape {beta.shape}, expected ({n_tx}, {n_users}) or ({n_tx}, 1)"
        )
    check_reliability(beta)
    return beta


def check_reliability(beta: np.ndarray) -> None:
    if not np.all(np.isfinite(beta)):
        raise ConfigError("reliability values must be finite")
    if np.any(beta < 0.0) or np.any(beta > 1.0):
        bad = beta[(beta < 0.0) | (beta > 1.0)].flat[0]
        raise ConfigError(f"reliability value {bad!r} outside [0, 1]")


def check_matrix(name: str, x: np.ndarray, shape: tuple[int, int]) -> None:
    if x.shape != shape:
        raise ValueError(f"{name} has shape {x.shape}, expected {shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")


def initial_beamformer(config: SystemConfig, seed: int) -> np.ndarray:
    """Complex Gaussian start, rescaled so that the power budget is met exactly."""
    rng = rng_for(seed, _INIT_STREAM)
    shape = (config.n_tx, config.n_users)
    w = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return w * math.sqrt(config.power_budget / np.vdot(w, w).real)
