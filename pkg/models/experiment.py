"""
Experiment configuration model
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from config.settings import get_setting
from utils.error_handling import ConfigError
from utils.random_streams import MAX_SEED

# Parameters naming input files; they must exist when the run starts
FILE_PARAMS = ("input", "prior", "data", "p", "q", "mu", "nu", "A", "B", "partition", "copula")
GLOBAL_KEYS = ("command", "seed", "out", "format", "workers")
FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    """One CLI run: subcommand, its parameters, output settings and the master seed"""
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    out: Optional[str] = None
    output_format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.seed is None:
            self.seed = get_setting("DEFAULT_SEED")

    def validate(self) -> "ExperimentConfig":
        """Raise ConfigError unless the config can run"""
        if not self.command:
            raise ConfigError("No experiment command given")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed <= MAX_SEED:
            raise ConfigError(f"Seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.output_format not in FORMATS:
            raise ConfigError(f"Output format must be one of {FORMATS}, got {self.output_format!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")
        for key in FILE_PARAMS:
            value = self.params.get(key)
            if value is None or (key == "copula" and value == "product"):
                continue
            if key == "input" and value in ("comonotone", "random"):
                continue
            if not os.path.isfile(str(value)):
                raise ConfigError(f"File for '{key}' does not exist: {value}")
        return self

    def config_hash(self) -> str:
        """sha256 of the canonical JSON of everything that determines the results"""
        canonical = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def echo(self) -> Dict[str, Any]:
        """Result-determining part of the config; worker count and output path are excluded"""
        return {"command": self.command, "params": self.params, "seed": self.seed, "format": self.output_format}

    def output_path(self) -> str:
        if self.out:
            return self.out
        name = self.command + (f"_{self.params['mode']}" if self.params.get("mode") else "")
        return os.path.join(get_setting("OUTPUT_DIR", "results"), f"{name}.{self.output_format}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "out": self.out,
            "format": self.output_format,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        unknown = set(data) - set(GLOBAL_KEYS) - {"params"}
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        return cls(
            command=data.get("command", ""),
            params=dict(data.get("params", {})),
            seed=data.get("seed", get_setting("DEFAULT_SEED")),
            out=data.get("out"),
            output_format=data.get("format", "csv"),
            workers=data.get("workers", get_setting("N_WORKERS", 1)),
        )

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path, "r") as f:
                return cls.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e

    @classmethod
    def from_args(cls, args) -> "ExperimentConfig":
        """Merge an optional --config document with command-line values; flags win"""
        base = cls.from_file(args.config) if getattr(args, "config", None) else cls(command="")
        values = {k: v for k, v in vars(args).items() if v is not None}

        command = values.pop("command", None) or base.command
        params = dict(base.params) if command == base.command else {}
        for key in ("config", "verbose", "list"):
            values.pop(key, None)
        seed = values.pop("seed", base.seed)
        out = values.pop("out", base.out)
        output_format = values.pop("format", base.output_format)
        workers = values.pop("workers", base.workers)
        params.update(values)
        return cls(command, params, seed, out, output_format, workers)
