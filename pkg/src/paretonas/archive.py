"""Run persistence: generation records, front/metric exports, checkpoints.

Layout of a run directory::

    run.json          config snapshot + config hash (written once)
    gen_0001.jsonl    one JSON line per individual of that generation
    fronts.csv        archive Pareto front per generation (append-only)
    metrics.csv       generation, hypervolume, hyperarea_difference, front_size
    checkpoint.json   engine state after the last completed generation

Generation files are append-only so an interrupted run never corrupts
earlier generations.  Wall-clock measurements live under a ``"timing"`` key
in each JSONL line; determinism comparisons strip that key.  All other
floats are either 6-decimal-quantized objectives or deterministic metric
values, so replaying a config with the same seed and a deterministic
evaluator regenerates identical files.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Any

from .config import SearchConfig
from .errors import CheckpointError, ConfigError

__all__ = [
    "GenerationRecord",
    "RunArchive",
    "RunWriter",
    "load_run_config",
    "load_records",
    "load_checkpoint",
    "load_archive",
]

RUN_FILE = "run.json"
FRONTS_FILE = "fronts.csv"
METRICS_FILE = "metrics.csv"
CHECKPOINT_FILE = "checkpoint.json"
_GEN_PATTERN = re.compile(r"gen_(\d{4})\.jsonl$")


def _fmt(value: float) -> str:
    return f"{value:.6f}"


@dataclass
class GenerationRecord:
    """Everything recorded about one generation."""

    generation: int
    individuals: list[dict[str, Any]]  # genome, objectives, rank, crowding, eval, timing
    front: list[dict[str, Any]]        # genome, objectives
    hypervolume: float
    hyperarea_difference: float

    @property
    def front_size(self) -> int:
        return len(self.front)

    def deterministic_dict(self, include_provenance: bool = True) -> dict[str, Any]:
        """Record content with timing (and optionally evaluator provenance)
        stripped, for replay/parity comparisons."""
        individuals = []
        for ind in self.individuals:
            item = {k: v for k, v in ind.items() if k != "timing"}
            if not include_provenance:
                item.pop("eval", None)
            individuals.append(item)
        return {
            "generation": self.generation,
            "individuals": individuals,
            "front": self.front,
            "hypervolume": self.hypervolume,
            "hyperarea_difference": self.hyperarea_difference,
        }


@dataclass
class RunArchive:
    """Config snapshot, per-generation records, evaluation cache, status."""

    config: SearchConfig
    config_hash: str
    records: list[GenerationRecord]
    eval_cache: dict[str, dict[str, Any]]
    status: str = "in_progress"
    extras: dict[str, Any] = field(default_factory=dict)

    def trace(self, include_provenance: bool = True) -> list[dict[str, Any]]:
        return [r.deterministic_dict(include_provenance) for r in self.records]

    def final_front(self) -> list[dict[str, Any]]:
        if not self.records:
            return []
        return self.records[-1].front

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunArchive):
            return NotImplemented
        return (
            self.config_hash == other.config_hash
            and self.status == other.status
            and self.trace() == other.trace()
            and self.eval_cache == other.eval_cache
        )


class RunWriter:
    """Writes run artifacts; ``fresh=False`` appends to an existing run."""

    def __init__(self, out_dir: str, config: SearchConfig, fresh: bool = True) -> None:
        self.out_dir = out_dir
        self.config = config
        self.config_hash = config.config_hash()
        self.objective_names = list(config.objectives)
        os.makedirs(out_dir, exist_ok=True)
        if fresh:
            self._start_fresh()
        else:
            if not os.path.exists(self._path(RUN_FILE)):
                raise CheckpointError(f"{out_dir} holds no run to continue")

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _start_fresh(self) -> None:
        with open(self._path(RUN_FILE), "w") as fh:
            json.dump(
                {"config": self.config.to_dict(), "config_hash": self.config_hash},
                fh, indent=2,
            )
            fh.write("\n")
        for name in os.listdir(self.out_dir):
            if _GEN_PATTERN.match(name):
                os.remove(self._path(name))
        if os.path.exists(self._path(CHECKPOINT_FILE)):
            os.remove(self._path(CHECKPOINT_FILE))
        with open(self._path(FRONTS_FILE), "w") as fh:
            fh.write(",".join(["genome", *self.objective_names, "generation"]) + "\n")
        with open(self._path(METRICS_FILE), "w") as fh:
            fh.write("generation,hypervolume,hyperarea_difference,front_size\n")

    def append_generation(self, record: GenerationRecord, state: dict[str, Any]) -> None:
        gen_path = self._path(f"gen_{record.generation:04d}.jsonl")
        with open(gen_path, "w") as fh:
            for ind in record.individuals:
                fh.write(json.dumps({"generation": record.generation, **ind}) + "\n")
        with open(self._path(FRONTS_FILE), "a") as fh:
            for point in record.front:
                objs = [_fmt(point["objectives"][name]) for name in self.objective_names]
                fh.write(",".join([point["genome"], *objs, str(record.generation)]) + "\n")
        with open(self._path(METRICS_FILE), "a") as fh:
            fh.write(
                f"{record.generation},{_fmt(record.hypervolume)},"
                f"{_fmt(record.hyperarea_difference)},{record.front_size}\n"
            )
        self.write_checkpoint(state)

    def write_checkpoint(self, state: dict[str, Any]) -> None:
        tmp = self._path(CHECKPOINT_FILE + ".tmp")
        with open(tmp, "w") as fh:
            json.dump({"config_hash": self.config_hash, **state}, fh)
        os.replace(tmp, self._path(CHECKPOINT_FILE))

    def trim_to(self, generation: int) -> None:
        """Drop artifacts newer than the checkpointed generation, so a resume
        after a mid-generation crash never duplicates rows."""
        for name in os.listdir(self.out_dir):
            m = _GEN_PATTERN.match(name)
            if m and int(m.group(1)) > generation:
                os.remove(self._path(name))
        for filename in (FRONTS_FILE, METRICS_FILE):
            path = self._path(filename)
            if not os.path.exists(path):
                continue
            with open(path) as fh:
                header = fh.readline()
                kept = []
                for line in fh:
                    fields = line.rstrip("\n").split(",")
                    gen = int(fields[-1]) if filename == FRONTS_FILE else int(fields[0])
                    if gen <= generation:
                        kept.append(line)
            with open(path, "w") as fh:
                fh.write(header)
                fh.writelines(kept)


def load_run_config(out_dir: str) -> tuple[SearchConfig, str]:
    path = os.path.join(out_dir, RUN_FILE)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is corrupt: {exc}") from exc
    config = SearchConfig.from_dict(data["config"])
    return config, data["config_hash"]


def load_records(out_dir: str) -> list[GenerationRecord]:
    """Rebuild generation records from the run directory."""
    gens: list[tuple[int, str]] = []
    for name in sorted(os.listdir(out_dir)):
        m = _GEN_PATTERN.match(name)
        if m:
            gens.append((int(m.group(1)), os.path.join(out_dir, name)))
    metrics: dict[int, tuple[float, float]] = {}
    fronts: dict[int, list[dict[str, Any]]] = {}
    metrics_path = os.path.join(out_dir, METRICS_FILE)
    if os.path.exists(metrics_path):
        with open(metrics_path) as fh:
            next(fh, None)
            for line in fh:
                g, hv, diff, _size = line.rstrip("\n").split(",")
                metrics[int(g)] = (float(hv), float(diff))
    fronts_path = os.path.join(out_dir, FRONTS_FILE)
    if os.path.exists(fronts_path):
        with open(fronts_path) as fh:
            header = next(fh, "").rstrip("\n").split(",")
            obj_names = header[1:-1]
            for line in fh:
                parts = line.rstrip("\n").split(",")
                gen = int(parts[-1])
                objectives = {n: float(v) for n, v in zip(obj_names, parts[1:-1])}
                fronts.setdefault(gen, []).append(
                    {"genome": parts[0], "objectives": objectives}
                )
    records = []
    for gen, path in gens:
        individuals = []
        with open(path) as fh:
            for line in fh:
                item = json.loads(line)
                item.pop("generation", None)
                individuals.append(item)
        hv, diff = metrics.get(gen, (0.0, 0.0))
        records.append(GenerationRecord(gen, individuals, fronts.get(gen, []), hv, diff))
    return records


def load_checkpoint(out_dir: str) -> dict[str, Any]:
    path = os.path.join(out_dir, CHECKPOINT_FILE)
    if not os.path.exists(path):
        raise CheckpointError(f"no checkpoint in {out_dir}")
    try:
        with open(path) as fh:
            state = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"checkpoint in {out_dir} is corrupt: {exc}") from exc
    required = {"config_hash", "status", "generation", "rng_state", "population"}
    missing = required - set(state)
    if missing:
        raise CheckpointError(f"checkpoint in {out_dir} lacks fields {sorted(missing)}")
    return state


def load_archive(out_dir: str) -> RunArchive:
    """Reload a persisted run; inverse of the writer for deterministic fields."""
    config, config_hash = load_run_config(out_dir)
    records = load_records(out_dir)
    try:
        state = load_checkpoint(out_dir)
        status = state.get("status", "in_progress")
        cache = state.get("eval_cache", {})
    except CheckpointError:
        status, cache = "in_progress", {}
    return RunArchive(config, config_hash, records, cache, status)
