"""Shared run configuration: defaults, a key=value file, then command-line flags."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .perception import DEFAULT_IOU_THRESHOLD
from .rpie import DEFAULT_DELTA

BACKENDS = ("oracle", "remote")


@dataclass(frozen=True)
class GlobalConfig:
    delta: float = DEFAULT_DELTA
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    adaptive: bool = False
    beta: float = 1.0
    backend: str = "oracle"
    endpoint: str = ""
    model: str = "default"
    timeout: float = 60.0
    retries: int = 2
    max_in_flight: int = 4
    seed: int = 0
    workers: int = 1
    corpus: str = ""

    def validate(self) -> "GlobalConfig":
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ConfigError(f"delta must be finite and positive, got {self.delta}")
        if not 0 < self.iou_threshold <= 1:
            raise ConfigError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("the remote backend needs an endpoint")
        if not self.timeout > 0:
            raise ConfigError("timeout must be positive")
        if self.retries < 0:
            raise ConfigError("retries must be non-negative")
        if self.max_in_flight < 1 or self.workers < 1:
            raise ConfigError("max_in_flight and workers must be at least 1")
        return self

    def merged(self, overrides: dict) -> "GlobalConfig":
        """Apply non-None overrides (coerced to the field types) and validate."""
        known = {f.name: f for f in fields(self)}
        values = {}
        for key, raw in overrides.items():
            if raw is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            values[key] = _coerce(key, raw, type(getattr(self, key)))
        return replace(self, **values).validate()

    def header_lines(self) -> list[str]:
        """The effective configuration, for report headers (no secrets, no clocks).

        The corpus is echoed separately by the commands that read one.
        """
        return [f"# {f.name}={getattr(self, f.name)}" for f in fields(self) if f.name != "corpus"]


def _coerce(key: str, raw, kind: type):
    if isinstance(raw, kind) and not (kind is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if kind is bool:
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from exc
    return text


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def load_config(path: str | Path | None, flags: dict) -> GlobalConfig:
    """Defaults, then the file, then flags (highest precedence)."""
    cfg = GlobalConfig()
    if path:
        cfg = cfg.merged(read_config_file(path))
    return cfg.merged(flags)
