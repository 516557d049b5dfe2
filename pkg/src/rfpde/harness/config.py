"""Experiment configuration files (YAML) and packaged presets."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from ..collocation import INTEGER_NAMES
from ..errors import InvalidArgument
from ..features import Activation
from ..optimizer import ALGORITHMS, HyperparamSpace


class ConfigError(InvalidArgument):
    pass


@dataclass
class OptimizerSettings:
    algorithms: list[str] = field(default_factory=lambda: ["msc_pso"])
    activations: list[str] = field(default_factory=lambda: ["sine"])
    M: int = 20
    T_max: int = 50


@dataclass
class SweepSettings:
    activations: list[str] = field(default_factory=lambda: ["sine", "sigmoid", "swish", "tanh"])
    omegas: list[float] = field(default_factory=lambda: [1.0, 20.0, 40.0, 80.0])
    kappas: list[float] = field(default_factory=lambda: [10.0, 30.0])
    N: int = 100
    N1: int = 1000
    N2: int = 2
    # "lambda" in the file
    weight: float = 100.0


@dataclass
class Seeds:
    outer: int = 0
    inner: int = 0
    eval: int = 1234


@dataclass
class NewtonSettings:
    max_iters: int = 10
    abs_tol: float = 1e-12
    damping: float = 1.0


@dataclass
class ExperimentConfig:
    problem: str
    params: dict[str, Any] = field(default_factory=dict)
    activation: str = "sine"
    derivative: str = "analytic"
    hyperparams: dict[str, float] | None = None
    space: dict[str, list[float]] | None = None
    fixed: dict[str, float] = field(default_factory=dict)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    seeds: Seeds = field(default_factory=Seeds)
    newton: NewtonSettings = field(default_factory=NewtonSettings)
    out: str | None = None

    def validate(self) -> "ExperimentConfig":
        from ..problems import PROBLEM_IDS

        if self.problem not in PROBLEM_IDS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {PROBLEM_IDS}")
        for act in [self.activation, *self.optimizer.activations, *self.sweep.activations]:
            try:
                Activation(act)
            except ValueError:
                raise ConfigError(f"unknown activation {act!r}") from None
        if self.derivative not in ("analytic", "fd"):
            raise ConfigError(f"derivative must be 'analytic' or 'fd', got {self.derivative!r}")
        for alg in self.optimizer.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        if self.optimizer.M < 1 or self.optimizer.T_max < 1:
            raise ConfigError("optimizer M and T_max must be positive")
        if self.space is not None:
            self.search_space()
        return self

    def search_space(self) -> HyperparamSpace:
        if not self.space:
            raise ConfigError("config has no 'space' section")
        try:
            return HyperparamSpace.from_ranges(
                {k: tuple(v) for k, v in self.space.items()},
                integer=[k for k in self.space if k in INTEGER_NAMES],
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad 'space' section: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["sweep"]["lambda"] = d["sweep"].pop("weight")
        return {k: v for k, v in d.items() if v is not None}

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))


_SECTIONS = {"optimizer": OptimizerSettings, "sweep": SweepSettings, "seeds": Seeds, "newton": NewtonSettings}


def _section(name: str, cls, raw) -> Any:
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    raw = dict(raw)
    if cls is SweepSettings and "lambda" in raw:
        raw["weight"] = raw.pop("lambda")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"section {name!r}: {exc}") from None


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping at top level")
    data = copy.deepcopy(data)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "problem" not in data:
        raise ConfigError("config needs a 'problem' key")
    for name, cls in _SECTIONS.items():
        data[name] = _section(name, cls, data.get(name))
    for name in ("params", "fixed"):
        if data.get(name) is None:
            data[name] = {}
    return ExperimentConfig(**data).validate()


def load_config(path) -> ExperimentConfig:
    """Parse a config file; YAML errors are reported with their line number."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: {where}: {exc.problem}") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("rfpde.presets").iterdir() if p.name.endswith(".yaml"))


def preset_path(name: str) -> Path:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return Path(str(resources.files("rfpde.presets") / f"{name}.yaml"))


def load_preset(name: str) -> ExperimentConfig:
    return load_config(preset_path(name))


def resolve_config(ref: str) -> ExperimentConfig:
    """A file path, or the name of a packaged preset."""
    p = Path(ref)
    if p.exists() or p.suffix in (".yaml", ".yml"):
        return load_config(p)
    return load_preset(ref)
