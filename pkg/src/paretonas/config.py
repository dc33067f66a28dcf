"""Run configuration: schema, validation, canonical hashing, factories.

A run is configured by a JSON document::

    {
      "space": "xception",
      "objectives": ["error", "flops"],
      "population": 12,
      "generations": 20,
      "seed": 7,
      "crossover_rate": 0.9,
      "mutation_rate": null,
      "subset_fraction": 0.2,
      "input_side": null,
      "evaluator": {"kind": "synthetic"},
      "stop": {"epsilon_fraction": 1e-4, "patience": 3},
      "surrogate": {"alpha": 0.6, ...},
      "throughput": {"macs_per_cycle": {"conv": 1.0, ...},
                     "overhead_cycles_per_layer": 10000.0},
      "eval_timeout_s": 600.0,
      "eval_retries": 1,
      "inject_genomes": []
    }

Every field except ``space``, ``objectives``, ``population``, ``generations``
and ``seed`` is optional.  ``mutation_rate: null`` means one expected flip
per genome (rate 1/L).  The canonical form (all defaults resolved) is hashed
with SHA-256; archives store the hash and resume refuses to continue a run
whose configuration changed.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .cost import DEFAULT_INPUT_SIDE, CostModel, LayerKind, ThroughputModel
from .errors import ConfigError
from .evaluators import Evaluator, SurrogateConstants, build_evaluator
from .genome import GENOME_LENGTH, Genome, Space, parse_genome

__all__ = [
    "StopRule",
    "EvaluatorSpec",
    "SearchConfig",
    "WORKER_COMMAND_ENV",
]

OBJECTIVE_NAMES = ("error", "flops", "params", "latency")

# Overrides the external evaluator command without touching the config hash.
WORKER_COMMAND_ENV = "PARETONAS_WORKER"


@dataclass(frozen=True)
class StopRule:
    """Early stop: hyperarea gain below epsilon for `patience` generations.

    ``epsilon_fraction`` scales the reference box spanned by the first
    generation's objective ranges.
    """

    epsilon_fraction: float = 1e-4
    patience: int = 3

    def __post_init__(self) -> None:
        if self.epsilon_fraction < 0:
            raise ConfigError("stop epsilon_fraction cannot be negative")
        if self.patience < 1:
            raise ConfigError("stop patience must be at least 1")


@dataclass(frozen=True)
class EvaluatorSpec:
    kind: str = "synthetic"
    path: str | None = None
    command: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("synthetic", "table", "external"):
            raise ConfigError(f"unknown evaluator kind {self.kind!r}")
        if self.kind == "table" and not self.path:
            raise ConfigError("table evaluator requires a 'path'")
        if self.kind == "external" and not self.command:
            raise ConfigError("external evaluator requires a 'command'")


def _default_throughput_dict() -> dict[str, Any]:
    model = ThroughputModel()
    return {
        "macs_per_cycle": {kind.value: rate for kind, rate in model.macs_per_cycle.items()},
        "overhead_cycles_per_layer": model.overhead_cycles_per_layer,
    }


@dataclass(frozen=True)
class SearchConfig:
    space: Space
    objectives: tuple[str, ...]
    population: int
    generations: int
    seed: int
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None -> 1 / genome length
    subset_fraction: float = 0.2
    input_side: int | None = None
    evaluator: EvaluatorSpec = field(default_factory=EvaluatorSpec)
    stop: StopRule = field(default_factory=StopRule)
    surrogate: SurrogateConstants = field(default_factory=SurrogateConstants)
    throughput: dict[str, Any] = field(default_factory=_default_throughput_dict)
    eval_timeout_s: float = 600.0
    eval_retries: int = 1
    inject_genomes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError(f"population must be at least 2, got {self.population}")
        if self.generations < 1:
            raise ConfigError(f"generations must be at least 1, got {self.generations}")
        if len(self.objectives) != 2:
            raise ConfigError(
                "exactly 2 objectives are required while hypervolume metrics are enabled"
            )
        for name in self.objectives:
            if name not in OBJECTIVE_NAMES:
                raise ConfigError(f"unknown objective {name!r}; pick from {OBJECTIVE_NAMES}")
        if len(set(self.objectives)) != len(self.objectives):
            raise ConfigError("objectives must be distinct")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must be in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must be in [0, 1] or null")
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ConfigError("subset_fraction must be in (0, 1]")
        if self.input_side is not None and self.input_side <= 0:
            raise ConfigError("input_side must be positive")
        if self.eval_timeout_s <= 0:
            raise ConfigError("eval_timeout_s must be positive")
        if self.eval_retries < 0:
            raise ConfigError("eval_retries cannot be negative")
        for text in self.inject_genomes:
            g = parse_genome(text)
            if g.space is not self.space:
                raise ConfigError(f"injected genome {text!r} is not in space {self.space.value}")
        self.throughput_model()  # fail fast on bad kinds or rates

    # -- derived values ----------------------------------------------------

    @property
    def effective_mutation_rate(self) -> float:
        if self.mutation_rate is not None:
            return self.mutation_rate
        return 1.0 / GENOME_LENGTH[self.space]

    @property
    def effective_input_side(self) -> int:
        return self.input_side if self.input_side is not None else DEFAULT_INPUT_SIDE[self.space]

    def injected(self) -> list[Genome]:
        return [parse_genome(t) for t in self.inject_genomes]

    def throughput_model(self) -> ThroughputModel:
        try:
            rates = {LayerKind(k): float(v)
                     for k, v in self.throughput.get("macs_per_cycle", {}).items()}
        except ValueError as exc:
            raise ConfigError(f"bad throughput table: {exc}") from None
        defaults = ThroughputModel().macs_per_cycle
        defaults.update(rates)
        return ThroughputModel(
            macs_per_cycle=defaults,
            overhead_cycles_per_layer=float(
                self.throughput.get("overhead_cycles_per_layer", 10_000.0)
            ),
        )

    def make_cost_model(self) -> CostModel:
        return CostModel(self.effective_input_side, self.throughput_model())

    def make_evaluator(self) -> Evaluator:
        command = self.evaluator.command
        override = os.environ.get(WORKER_COMMAND_ENV)
        if self.evaluator.kind == "external" and override:
            command = override
        return build_evaluator(
            self.evaluator.kind,
            path=self.evaluator.path,
            command=command,
            space=self.space,
            constants=self.surrogate,
            timeout_s=self.eval_timeout_s,
            retries=self.eval_retries,
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "space": self.space.value,
            "objectives": list(self.objectives),
            "population": self.population,
            "generations": self.generations,
            "seed": self.seed,
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "subset_fraction": self.subset_fraction,
            "input_side": self.input_side,
            "evaluator": {
                "kind": self.evaluator.kind,
                "path": self.evaluator.path,
                "command": self.evaluator.command,
            },
            "stop": {
                "epsilon_fraction": self.stop.epsilon_fraction,
                "patience": self.stop.patience,
            },
            "surrogate": self.surrogate.to_dict(),
            "throughput": self.throughput,
            "eval_timeout_s": self.eval_timeout_s,
            "eval_retries": self.eval_retries,
            "inject_genomes": list(self.inject_genomes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SearchConfig":
        known = {
            "space", "objectives", "population", "generations", "seed",
            "crossover_rate", "mutation_rate", "subset_fraction", "input_side",
            "evaluator", "stop", "surrogate", "throughput", "eval_timeout_s",
            "eval_retries", "inject_genomes",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for required in ("space", "objectives", "population", "generations", "seed"):
            if required not in data:
                raise ConfigError(f"config is missing required field {required!r}")
        try:
            space = Space(data["space"])
        except ValueError:
            raise ConfigError(f"unknown space {data['space']!r}") from None
        kwargs: dict[str, Any] = {
            "space": space,
            "objectives": tuple(data["objectives"]),
            "population": int(data["population"]),
            "generations": int(data["generations"]),
            "seed": int(data["seed"]),
        }
        if data.get("crossover_rate") is not None:
            kwargs["crossover_rate"] = float(data["crossover_rate"])
        if data.get("mutation_rate") is not None:
            kwargs["mutation_rate"] = float(data["mutation_rate"])
        if data.get("subset_fraction") is not None:
            kwargs["subset_fraction"] = float(data["subset_fraction"])
        if data.get("input_side") is not None:
            kwargs["input_side"] = int(data["input_side"])
        if data.get("evaluator") is not None:
            ev = data["evaluator"]
            kwargs["evaluator"] = EvaluatorSpec(
                kind=ev.get("kind", "synthetic"),
                path=ev.get("path"),
                command=ev.get("command"),
            )
        if data.get("stop") is not None:
            st = data["stop"]
            kwargs["stop"] = StopRule(
                epsilon_fraction=float(st.get("epsilon_fraction", 1e-4)),
                patience=int(st.get("patience", 3)),
            )
        if data.get("surrogate") is not None:
            kwargs["surrogate"] = SurrogateConstants.from_dict(data["surrogate"])
        if data.get("throughput") is not None:
            kwargs["throughput"] = dict(data["throughput"])
        if data.get("eval_timeout_s") is not None:
            kwargs["eval_timeout_s"] = float(data["eval_timeout_s"])
        if data.get("eval_retries") is not None:
            kwargs["eval_retries"] = int(data["eval_retries"])
        if data.get("inject_genomes"):
            kwargs["inject_genomes"] = tuple(data["inject_genomes"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "SearchConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
