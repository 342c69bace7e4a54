"""Experiment configuration: TOML loading, validation and hashing."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..eos import EosClosure
from ..spectral import TorusGrid

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "REQUIRED_S"]

DEFAULT_EPSILONS = (1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3)
# indices that appear as CSV columns
REQUIRED_S = (0, 2, 4)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 64
    active_dims: int = 2
    gamma: float = 5.0 / 3.0
    p_floor: float = 1e-8
    S_floor: float = 1e-8
    epsilons: tuple = DEFAULT_EPSILONS
    t_final: float = 0.5
    cfl: float = 0.4
    s_list: tuple = (0, 1, 2, 4)
    cadence: int = 8
    workers: int = 1
    ic_recipe: str = "default"
    amp: float = 0.1
    perturb_amp: float = 1.0
    seed: int = 20240521
    output_dir: str = "out"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "s_list", tuple(sorted(set(int(s) for s in self.s_list))))
        if not eps:
            raise ConfigError("at least one epsilon is required")
        if any(e <= 0 for e in eps):
            raise ConfigError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if not 0 < self.cfl <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.perturb_amp < 0:
            raise ConfigError("perturb_amp must be non-negative")
        if self.cadence < 1:
            raise ConfigError("cadence must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not set(REQUIRED_S) <= set(self.s_list):
            raise ConfigError(f"s_list must contain {REQUIRED_S}")
        if self.ic_recipe != "default":
            raise ConfigError(f"unknown ic recipe {self.ic_recipe!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        # constructs and validates
        self.grid
        self.eos

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.n, self.active_dims)

    @property
    def eos(self) -> EosClosure:
        return EosClosure(self.gamma, self.p_floor, self.S_floor)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def hash(self) -> str:
        """Short digest of every field that affects numerical output."""
        d = asdict(self)
        d.pop("workers")
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# TOML section -> {toml key: dataclass field}
_SCHEMA = {
    "grid": {"n": "n", "active_dims": "active_dims"},
    "eos": {"gamma": "gamma", "p_floor": "p_floor", "S_floor": "S_floor"},
    "sweep": {
        "epsilons": "epsilons",
        "t_final": "t_final",
        "cfl": "cfl",
        "s_list": "s_list",
        "cadence": "cadence",
        "workers": "workers",
    },
    "ic": {
        "recipe": "ic_recipe",
        "amp": "amp",
        "perturb_amp": "perturb_amp",
        "seed": "seed",
    },
    "output": {"dir": "output_dir"},
}


def config_from_mapping(data: dict) -> ExperimentConfig:
    kwargs = {}
    for section, body in data.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kwargs[_SCHEMA[section][key]] = value
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a TOML config; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig()
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return config_from_mapping(data)
