"""Experiment configuration: a JSON-backed dataclass with flag overrides."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .analytic import AlgKind
from .oracle import PeriodicSet


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n_exp: int = 10
    s: int = 208
    P: int = 5
    M: int = 7
    p: float = 0.0
    trials: int = 100
    seed: int | None = None
    algorithms: list[str] = field(default_factory=lambda: [a.value for a in AlgKind])
    output_dir: str = "out"
    L: int = 6
    l_max: int = 400
    l_step: int = 8
    max_retries: int = 16
    max_trials: int = 100_000
    workers: int = 1

    @property
    def N(self) -> int:
        return 1 << self.n_exp

    @property
    def algs(self) -> list[AlgKind]:
        return [AlgKind(a) for a in self.algorithms]

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    def override(self, **kw) -> "ExperimentConfig":
        data = asdict(self)
        data.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig(**data)

    def validate(self, oracle: bool = True, stochastic: bool = False) -> None:
        """Raise ConfigError with a precise message; never touches the filesystem."""
        if not 1 <= self.n_exp <= 24:
            raise ConfigError(f"n_exp={self.n_exp} outside [1, 24]")
        if oracle:
            try:
                PeriodicSet(self.N, self.s, self.P, self.M)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif not 0 < 2 * self.M < self.N:
            raise ConfigError(f"need 0 < 2M < N, got M={self.M}, N={self.N}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"rate p={self.p} outside [0, 1]")
        if self.trials < 1:
            raise ConfigError(f"trials={self.trials} must be >= 1")
        if stochastic and self.seed is None:
            raise ConfigError("this subcommand is stochastic: --seed is required")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed={self.seed} is not an unsigned 64-bit integer")
        for a in self.algorithms:
            try:
                AlgKind(a)
            except ValueError:
                raise ConfigError(f"unknown algorithm {a!r}; choose from "
                                  f"{[k.value for k in AlgKind]}") from None
        if self.max_retries < 1 or self.max_trials < 1:
            raise ConfigError("max_retries and max_trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
