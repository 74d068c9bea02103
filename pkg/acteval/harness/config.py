"""
Experiment configuration: JSON documents loaded into dataclasses, with
environment overrides read through python-dotenv.
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import load_dotenv

from ..base import ConfigError, DomainError
from ..datagen import CloneSpec, GeneratorConfig, GeneratorKind
from ..evaluators import ALGORITHMS, create_evaluator

ENV_WORKERS = "ACTEVAL_WORKERS"
ENV_OUTPUT_DIR = "ACTEVAL_OUTPUT_DIR"
ENV_LOG_LEVEL = "ACTEVAL_LOG_LEVEL"


@dataclass
class AlgorithmSpec:
    """
    label names the curve in reports and seeds the run streams; it defaults
    to the algorithm name and must be unique within an experiment.
    """
    name: str
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if not self.label:
            self.label = self.name

    @classmethod
    def parse(cls, entry: Any) -> "AlgorithmSpec":
        """
        A bare name or {"name": ..., "params": {...}, "label": ...}.
        """
        if isinstance(entry, str):
            spec = cls(entry)
        elif isinstance(entry, dict):
            spec = _build(cls, entry, "algorithms[]")
        else:
            raise ConfigError(f"algorithm entry must be a name or an object, got {entry!r}")
        if spec.name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {spec.name!r}; choose from {sorted(ALGORITHMS)}")
        if not isinstance(spec.params, dict):
            raise ConfigError(f"params of {spec.name} must be an object")
        if not isinstance(spec.label, str):
            raise ConfigError(f"label of {spec.name} must be a string")
        return spec


@dataclass
class SweepSpec:
    """
    Cross product of dispersions, k-value sets and algorithm sets; empty
    lists keep the experiment's own value.
    """
    phi: list = field(default_factory=list)
    k_values: list = field(default_factory=list)
    algorithms: list = field(default_factory=list)


@dataclass
class KemenyCheckSpec:
    phi: list = field(default_factory=lambda: [0.0, 0.3, 0.6])
    instances: int = 100
    sampling_horizon: int = 2000
    sampling_seeds: int = 10
    sampling_every: int = 10


@dataclass
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    clones: CloneSpec = field(default_factory=CloneSpec)
    algorithms: list = field(default_factory=list)
    horizon: int = 10000
    k_values: list = field(default_factory=lambda: [3, 8])
    seeds: Any = 10
    window: int = 250
    output_dir: str = "results"
    workers: int = 1
    log_log: bool = False
    ratings: bool = False
    sweep: SweepSpec = field(default_factory=SweepSpec)
    kemeny_check: KemenyCheckSpec = field(default_factory=KemenyCheckSpec)

    @property
    def seed_list(self) -> list[int]:
        """
        An integer count means consecutive seeds from the generator seed.
        """
        if isinstance(self.seeds, int):
            return [self.generator.seed + i for i in range(self.seeds)]
        return [int(s) for s in self.seeds]

    @property
    def cutoff_agents(self) -> int | None:
        """
        Agent count the rank cutoffs refer to; unknown before a dataset is read.
        """
        if self.generator.kind is GeneratorKind.DATASET:
            return None
        return self.generator.m

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if self.window < 1:
            raise ConfigError(f"window must be at least 1, got {self.window}")
        if isinstance(self.seeds, bool) or not isinstance(self.seeds, (int, list)):
            raise ConfigError(f"seeds must be a count or a list, got {self.seeds!r}")
        if not self.seed_list:
            raise ConfigError("at least one seed is required")
        if not self.k_values:
            raise ConfigError("at least one rank cutoff k is required")
        m = self.cutoff_agents
        for k in self.k_values:
            if not isinstance(k, int) or k < 1 or (m is not None and k > m):
                raise ConfigError(f"rank cutoff k={k} outside [1, {m}]")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        try:
            self.generator.validate()
        except DomainError as e:
            raise ConfigError(f"generator: {e}") from e

        labels = [spec.label for spec in self.algorithms]
        for label in labels:
            if labels.count(label) > 1:
                raise ConfigError(f"algorithm label {label!r} is used {labels.count(label)} times; "
                                  f"give each entry a distinct \"label\"")
        if m is not None:
            # hyperparameter errors surface before any run starts
            for spec in self.algorithms:
                create_evaluator(spec.name, m + self.clones.count, self.generator.n,
                                 np.random.default_rng(0), self.generator.score_interval, **spec.params)

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls) if f.init}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _generator(data: dict) -> GeneratorConfig:
    data = dict(data)
    if "kind" in data:
        try:
            data["kind"] = GeneratorKind(data["kind"])
        except ValueError:
            raise ConfigError(f"unknown generator kind {data['kind']!r}") from None
    for key in ("score_interval", "rating_interval"):
        if key in data:
            data[key] = tuple(float(x) for x in data[key])
    return _build(GeneratorConfig, data, "generator")


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys {sorted(unknown)}")

    if "generator" in data:
        data["generator"] = _generator(data["generator"])
    if "clones" in data:
        data["clones"] = _build(CloneSpec, data["clones"], "clones")
    if "sweep" in data:
        sweep = _build(SweepSpec, data["sweep"], "sweep")
        for algorithms in sweep.algorithms:
            if not isinstance(algorithms, list) or not algorithms:
                raise ConfigError("sweep.algorithms must be a list of non-empty algorithm lists")
        sweep.algorithms = [[AlgorithmSpec.parse(entry) for entry in algorithms] for algorithms in sweep.algorithms]
        data["sweep"] = sweep
    if "kemeny_check" in data:
        data["kemeny_check"] = _build(KemenyCheckSpec, data["kemeny_check"], "kemeny_check")
    data["algorithms"] = [AlgorithmSpec.parse(entry) for entry in data.get("algorithms", [])]

    config = _build(ExperimentConfig, data, "configuration")
    apply_env(config)
    config.validate()
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"configuration file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"configuration file {path} is not valid JSON: {e}") from e
    return config_from_dict(data)


def apply_env(config: ExperimentConfig) -> ExperimentConfig:
    """
    Environment (and .env) overrides; command-line flags are applied later.
    """
    load_dotenv()
    workers = os.getenv(ENV_WORKERS)
    if workers:
        try:
            config.workers = int(workers)
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS}={workers!r} is not an integer") from None
    output_dir = os.getenv(ENV_OUTPUT_DIR)
    if output_dir:
        config.output_dir = output_dir
    return config


def env_log_level(default: str = "INFO") -> str:
    load_dotenv()
    return os.getenv(ENV_LOG_LEVEL, default).upper()
