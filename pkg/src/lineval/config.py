"""Run configuration: a flat TOML-style key/value file, overridden by flags.

Example file::

    # bench.conf
    corpus = ./bench
    outputs = ./outputs
    jobs = 4
    seed = 7
    max_retries = 4
    temperatures = 0.1, 0.8
    char_limits = 6000, 3000, 1500
    endpoint = http://localhost:8000/v1
    model = my-converter

Unknown keys are rejected at startup so typos fail fast; every run logs
the resolved configuration for reproducibility.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

__all__ = ["Config", "ConfigError", "load_config"]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    corpus: Optional[str] = None
    outputs: Optional[str] = None
    endpoint: Optional[str] = None
    model: Optional[str] = None
    jobs: int = 1
    seed: int = 0
    bootstrap_iterations: int = 10000
    max_retries: int = 4
    temperatures: tuple[float, ...] = (0.1, 0.8)
    char_limits: tuple[int, ...] = (6000, 3000, 1500)
    fallback: str = "raw_anchor_text"
    tau: Optional[float] = None
    max_diffs_default_ratio: float = 0.1
    repeat_threshold: int = 30
    elo_k: float = 32.0
    elo_shuffles: int = 100
    elo_resamples: int = 5000

    def validate(self) -> None:
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.bootstrap_iterations < 1:
            raise ConfigError("bootstrap_iterations must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if not self.temperatures or any(t <= 0 or t > 2 for t in self.temperatures):
            raise ConfigError("temperatures must be in (0, 2]")
        if list(self.char_limits) != sorted(set(self.char_limits), reverse=True):
            raise ConfigError("char_limits must be strictly decreasing")
        if self.fallback not in ("raw_anchor_text", "empty"):
            raise ConfigError("fallback must be 'raw_anchor_text' or 'empty'")
        if self.tau is not None and self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.repeat_threshold < 1:
            raise ConfigError("repeat_threshold must be >= 1")
        if self.elo_k <= 0 or self.elo_shuffles < 1 or self.elo_resamples < 1:
            raise ConfigError("elo knobs must be positive")

    def resolved(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _coerce(name: str, raw: str, target_type) -> object:
    raw = raw.strip()
    try:
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        if target_type == tuple[float, ...]:
            return tuple(float(v) for v in raw.split(","))
        if target_type == tuple[int, ...]:
            return tuple(int(v) for v in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from exc
    if raw.startswith(('"', "'")) and raw.endswith(raw[0]) and len(raw) >= 2:
        raw = raw[1:-1]
    return raw


_FIELD_TYPES = {
    "jobs": int, "seed": int, "bootstrap_iterations": int, "max_retries": int,
    "repeat_threshold": int, "elo_shuffles": int, "elo_resamples": int,
    "tau": float, "max_diffs_default_ratio": float, "elo_k": float,
    "temperatures": tuple[float, ...], "char_limits": tuple[int, ...],
}


def load_config(path: Optional[str | Path] = None, overrides: Optional[dict] = None) -> Config:
    """Defaults, then the config file, then non-None overrides (flags)."""
    config = Config()
    known = {f.name for f in fields(Config)}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            setattr(config, key, _coerce(key, raw, _FIELD_TYPES.get(key, str)))
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in known:
                raise ConfigError(f"unknown config override {key!r}")
            setattr(config, key, value)
    config.validate()
    log.info("resolved config: %s", config.resolved())
    return config
