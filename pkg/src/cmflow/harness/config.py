"""Experiment configuration: JSON file plus command-line overrides.

A config file is a JSON object tagged ``"schema": "cmflow-cfg-v1"``; every
other key is a field of :class:`ExperimentConfig`.  Flags given on the
command line win over the file.  The output directory may also come from
the ``CMFLOW_OUT`` environment variable (flag > environment > file >
default).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import CmflowError

SCHEMA = "cmflow-cfg-v1"
OUT_ENV = "CMFLOW_OUT"


class ConfigError(CmflowError):
    """Malformed or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    command: str = "properties"
    out: str = "cmflow-out"
    seed: int = 0
    jobs: int = 1
    # kernel property grid
    dims: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    kappas: list | None = None
    perturb_kernel: float = 0.0
    q_draws: int = 2000
    tolerance: float = 1e-8
    # shapes
    shape: str | None = None
    shape_file: str | None = None
    space: str | None = None
    params: dict = field(default_factory=dict)
    radii: list | None = None
    resolutions: list = field(default_factory=lambda: [256])
    # flows
    dt: float = 1e-3
    t_end: float = math.inf
    record_dt: float | None = None
    cfl: float = 0.25
    checkpoints: int = 5
    huisken_samples: int = 3
    # counterexample
    t0_values: list = field(default_factory=lambda: [0.1, 0.5, 1.0])

    def validate(self) -> "ExperimentConfig":
        for name in ("tolerance", "dt", "cfl"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"{name} must be positive")
        if self.record_dt is not None and not self.record_dt > 0:
            raise ConfigError("record_dt must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if self.checkpoints < 2:
            raise ConfigError("checkpoints must be at least 2")
        if not self.dims or any(int(n) < 1 for n in self.dims):
            raise ConfigError("dims must be positive integers")
        if any(int(q) < 8 for q in self.resolutions):
            raise ConfigError("resolutions must be at least 8")
        if self.kappas is not None and any(k < 0 for k in self.kappas):
            raise ConfigError("kappas must be nonnegative")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object")
        return self

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["schema"] = SCHEMA
        return doc


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    schema = doc.pop("schema", None)
    if schema != SCHEMA:
        raise ConfigError(f"config schema must be {SCHEMA!r}, got {schema!r}")
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return doc


def build_config(command: str, overrides: dict, config_path=None) -> ExperimentConfig:
    """Merge defaults, the config file, the environment and flag overrides."""
    values = {}
    if config_path:
        values.update(load_config_file(config_path))
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        values["out"] = env_out
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["command"] = command
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
