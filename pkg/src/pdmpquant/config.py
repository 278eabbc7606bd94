"""Run configuration: flat YAML key-value files with one level of ``include``."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import yaml

from .errors import ConfigError


@dataclass
class RunConfig:
    model: str = "repair-workshop"
    functional: Optional[str] = None
    params: dict = field(default_factory=dict)
    x0: Optional[list] = None
    jumps: Optional[int] = None
    horizon: Optional[float] = None      # years; model default when unset
    target_prob: Optional[float] = None  # 1e-3 when N is derived
    grid_points: int = 100
    samples: Optional[int] = None        # training samples, 20 * grid_points when unset
    estimation_samples: Optional[int] = None
    rate_a: float = 1.0
    rate_b: float = 1.0
    A: Optional[float] = None
    B: Optional[float] = None
    norm_p: float = 2.0
    seed: int = 0
    n_sims: int = 1_000_000
    n_sims_N: int = 100_000
    value: Optional[float] = None
    param: Optional[str] = None
    range: Optional[list] = None
    grid: Optional[str] = None
    out: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("grid_points", "n_sims", "n_sims_N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("samples", "estimation_samples"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")
        if self.jumps is not None and self.jumps < 0:
            raise ConfigError("jumps must be non-negative")
        if self.jumps is not None and self.target_prob is not None:
            raise ConfigError("give either jumps or target_prob, not both")
        if self.target_prob is not None and not 0 < self.target_prob < 1:
            raise ConfigError("target_prob must lie in (0, 1)")
        if self.horizon is not None and self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        if self.norm_p < 1:
            raise ConfigError("norm_p must be >= 1")
        for name in ("A", "B"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be positive")
        if self.range is not None and len(self.range) != 3:
            raise ConfigError("range is [start, stop, step]")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a mapping")

    @property
    def training_samples(self):
        return self.samples if self.samples is not None else 20 * self.grid_points

    def to_dict(self):
        return asdict(self)

    def merged(self, **overrides):
        d = self.to_dict()
        d.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**d)


KEYS = {f.name for f in fields(RunConfig)}


def _read_yaml(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a key-value mapping")
    return data


def _check_keys(data, path):
    unknown = set(data) - KEYS - {"include"}
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {sorted(unknown)}")


def load_config(path) -> RunConfig:
    """Read ``path``; an ``include`` key names a base file whose values it overrides."""
    data = _read_yaml(path)
    _check_keys(data, path)
    inc = data.pop("include", None)
    merged = {}
    if inc is not None:
        inc_path = inc if os.path.isabs(inc) else os.path.join(os.path.dirname(os.path.abspath(path)), inc)
        base = _read_yaml(inc_path)
        _check_keys(base, inc_path)
        if "include" in base:
            raise ConfigError(f"{inc_path}: nested include is not supported")
        merged.update(base)
    merged.update(data)
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
