"""The elitist (mu + lambda) evolutionary search loop.

Each generation evaluates a batch of previously unseen genomes (the seeded
population first, then offspring bred by tournament selection, uniform
crossover, and per-bit mutation), merges offspring with the surviving
parents, re-ranks the merged pool, and truncates it back to the population
size by rank then crowding.  A cumulative archive of all evaluated
individuals supplies the reported Pareto front; its hypervolume against a
reference point fixed from generation 1 drives the early-stop rule.

Evaluations are cached by genome and offspring are bred to be novel, so a
run of G generations with population M performs exactly M * G unique
evaluations.  All randomness flows through one seeded generator whose state
is checkpointed after every generation; resuming replays the identical run.
"""

from __future__ import annotations

from typing import Any, Callable, Sequence

import numpy as np

from .archive import GenerationRecord, RunArchive, RunWriter
from .config import SearchConfig
from .cost import CostModel, CostReport
from .errors import EvaluationError
from .evaluators import EvalRequest, EvalResponse, Evaluator
from .genome import Genome, decode, parse_genome, space_cardinality
from .nsga2 import (
    Individual,
    Population,
    crossover,
    crowding_distance,
    fast_nondominated_sort,
    mutate,
    random_genome,
    seed_population,
    tournament_select,
)
from .pareto import ParetoFront, extract_front, filter_dominating, hypervolume_2d

__all__ = ["EvolutionEngine", "evolve"]

_QUANT_DECIMALS = 6

# A generation breeds novel offspring; give up on operators after this many
# attempts per slot and fall back to rejection-sampling random genomes.
_BREED_ATTEMPTS_PER_SLOT = 200

GenerationHook = Callable[["EvolutionEngine", GenerationRecord], None]


def _quantize(value: float) -> float:
    return round(float(value), _QUANT_DECIMALS)


class EvolutionEngine:
    """Stateful search loop; checkpointable after every generation."""

    def __init__(self, config: SearchConfig, evaluator: Evaluator | None = None,
                 cost_model: CostModel | None = None,
                 writer: RunWriter | None = None) -> None:
        self.config = config
        self._owns_evaluator = evaluator is None
        self.evaluator = evaluator if evaluator is not None else config.make_evaluator()
        self.cost_model = cost_model if cost_model is not None else config.make_cost_model()
        self.writer = writer
        self.rng = np.random.default_rng(config.seed)
        self.population: Population | None = None
        self.archive_individuals: list[Individual] = []
        self.eval_cache: dict[str, dict[str, Any]] = {}
        self.seen: set[str] = set()
        self.records: list[GenerationRecord] = []
        self.generation = 0
        self.ref_point: tuple[float, ...] | None = None
        self.box_area: float | None = None
        self.hv_prev = 0.0
        self.stop_streak = 0
        self.unique_evaluations = 0
        self.cache_hits = 0
        self.status = "in_progress"
        eval_objs = tuple(n for n in config.objectives if n in ("error", "latency"))
        self._eval_objectives = eval_objs
        self._needs_evaluator = bool(eval_objs)

    # -- evaluation ---------------------------------------------------------

    def _response_from_cache(self, text: str) -> EvalResponse:
        entry = self.eval_cache[text]
        return EvalResponse(
            miou_error_pct=entry["miou_error_pct"],
            latency_cycles=entry["latency_cycles"],
            evaluator_id=entry["evaluator_id"],
            wall_time_ms=entry["wall_time_ms"],
        )

    def _evaluate_batch(self, genomes: Sequence[Genome]) -> list[Individual]:
        responses: dict[str, EvalResponse] = {}
        if self._needs_evaluator:
            fresh: list[Genome] = []
            fresh_texts: set[str] = set()
            for g in genomes:
                if g.text in self.eval_cache:
                    self.cache_hits += 1
                    responses[g.text] = self._response_from_cache(g.text)
                elif g.text in fresh_texts:
                    self.cache_hits += 1  # duplicate within the batch
                else:
                    fresh.append(g)
                    fresh_texts.add(g.text)
            requests = [
                EvalRequest(g.text, self.config.subset_fraction, self._eval_objectives)
                for g in fresh
            ]
            results = self.evaluator.evaluate_many(requests)
            # Assembly is keyed by genome, so completion order is irrelevant.
            for req, resp in zip(requests, results):
                responses[req.genome] = resp
                self.eval_cache[req.genome] = {
                    "miou_error_pct": resp.miou_error_pct,
                    "latency_cycles": resp.latency_cycles,
                    "evaluator_id": resp.evaluator_id,
                    "wall_time_ms": resp.wall_time_ms,
                }
        individuals = []
        for g in genomes:
            resp = responses.get(g.text)
            report = self.cost_model.report(decode(g))
            objectives = tuple(
                self._objective_value(name, resp, report) for name in self.config.objectives
            )
            meta: dict[str, Any] = {}
            if resp is not None:
                meta = {
                    "evaluator_id": resp.evaluator_id,
                    "subset_fraction": self.config.subset_fraction,
                    "wall_time_ms": resp.wall_time_ms,
                }
            individuals.append(Individual(g, objectives, eval_meta=meta))
            if g.text not in self.seen:
                self.seen.add(g.text)
                self.unique_evaluations += 1
        return individuals

    def _objective_value(self, name: str, resp: EvalResponse | None,
                         report: CostReport) -> float:
        if name == "error":
            if resp is None:
                raise EvaluationError("error objective requires an evaluator response")
            return _quantize(resp.miou_error_pct)
        if name == "flops":
            return _quantize(report.flops)
        if name == "params":
            return _quantize(report.params)
        if name == "latency":
            if resp is not None and resp.latency_cycles is not None:
                return _quantize(resp.latency_cycles)
            return _quantize(report.latency_cycles)
        raise EvaluationError(f"unknown objective {name!r}")

    # -- selection ----------------------------------------------------------

    def _rank_and_crowd(self, individuals: list[Individual]) -> list[list[int]]:
        fronts = fast_nondominated_sort([i.objectives for i in individuals])
        for rank, front in enumerate(fronts):
            distances = crowding_distance([individuals[i].objectives for i in front])
            for idx, dist in zip(front, distances):
                individuals[idx].rank = rank
                individuals[idx].crowding = dist
        return fronts

    def _environmental_selection(self, merged: list[Individual]) -> list[Individual]:
        fronts = self._rank_and_crowd(merged)
        m = self.config.population
        survivors: list[Individual] = []
        for front in fronts:
            if len(survivors) + len(front) <= m:
                survivors.extend(merged[i] for i in front)
            else:
                need = m - len(survivors)
                by_crowding = sorted(front, key=lambda i: (-merged[i].crowding, i))
                survivors.extend(merged[i] for i in by_crowding[:need])
                break
        return survivors

    def _breed_offspring(self) -> list[Genome]:
        assert self.population is not None
        m = self.config.population
        rate_x = self.config.crossover_rate
        rate_mut = self.config.effective_mutation_rate
        batch: list[Genome] = []
        batch_texts: set[str] = set()
        attempts = 0
        while len(batch) < m and attempts < _BREED_ATTEMPTS_PER_SLOT * m:
            attempts += 1
            p1 = tournament_select(self.population, self.rng)
            p2 = tournament_select(self.population, self.rng)
            c1, c2 = crossover(p1.genome, p2.genome, rate_x, self.rng)
            for child in (mutate(c1, rate_mut, self.rng), mutate(c2, rate_mut, self.rng)):
                if len(batch) >= m:
                    break
                if child.text in self.seen or child.text in batch_texts:
                    continue
                batch.append(child)
                batch_texts.add(child.text)
        cardinality = space_cardinality(self.config.space)
        while len(batch) < m:
            if len(self.seen) + len(batch) >= cardinality:
                raise EvaluationError("search space exhausted; no novel genomes remain")
            g = random_genome(self.config.space, self.rng)
            if g.text in self.seen or g.text in batch_texts:
                continue
            batch.append(g)
            batch_texts.add(g.text)
        return batch

    # -- metrics ------------------------------------------------------------

    def _update_archive(self, new_individuals: list[Individual]) -> ParetoFront:
        candidates = self.archive_individuals + new_individuals
        fronts = fast_nondominated_sort([i.objectives for i in candidates])
        rank0 = [candidates[i] for i in fronts[0]] if fronts else []
        rank0.sort(key=lambda ind: (ind.objectives, ind.genome.text))
        self.archive_individuals = rank0
        return extract_front(rank0, self.generation, self.config.objectives)

    def _fix_reference(self) -> None:
        assert self.population is not None
        objs = [ind.objectives for ind in self.population.individuals]
        maxima = [max(vec[m] for vec in objs) for m in range(len(self.config.objectives))]
        minima = [min(vec[m] for vec in objs) for m in range(len(self.config.objectives))]
        # 1.1x headroom; the epsilon keeps the ref strictly dominated when an
        # objective maxes out at zero.
        self.ref_point = tuple(mx * 1.1 + 1e-9 for mx in maxima)
        self.box_area = 1.0
        for mx, mn in zip(self.ref_point, minima):
            self.box_area *= max(mx - mn, 0.0)

    def _stop_epsilon(self) -> float:
        if not self.box_area:
            return self.config.stop.epsilon_fraction
        return self.config.stop.epsilon_fraction * self.box_area

    # -- the loop -----------------------------------------------------------

    def step(self) -> GenerationRecord:
        """Run one generation; returns its record after persisting it."""
        gen = self.generation + 1
        if gen == 1:
            seeded = seed_population(self.config.space, self.config.population,
                                     self.rng, inject=self.config.injected())
            evaluated = self._evaluate_batch([ind.genome for ind in seeded.individuals])
            self.population = Population(evaluated, generation=gen)
            self._rank_and_crowd(self.population.individuals)
            new_individuals = list(self.population.individuals)
        else:
            offspring_genomes = self._breed_offspring()
            offspring = self._evaluate_batch(offspring_genomes)
            assert self.population is not None
            merged = self.population.individuals + offspring
            self.population = Population(self._environmental_selection(merged), gen)
            new_individuals = offspring
        self.generation = gen
        if self.ref_point is None:
            self._fix_reference()

        front = self._update_archive(new_individuals)
        assert self.ref_point is not None
        dominating = filter_dominating(front.objectives, self.ref_point)
        hv = hypervolume_2d(dominating, self.ref_point)
        diff = hv - self.hv_prev
        self.hv_prev = hv

        if gen >= 2:
            if diff < self._stop_epsilon():
                self.stop_streak += 1
            else:
                self.stop_streak = 0
            if self.stop_streak >= self.config.stop.patience:
                self.status = "stopped_early"
        if gen >= self.config.generations and self.status == "in_progress":
            self.status = "completed"

        record = GenerationRecord(
            generation=gen,
            individuals=[self._individual_dict(i) for i in self.population.individuals],
            front=[{"genome": text, "objectives": dict(zip(self.config.objectives, objs))}
                   for objs, text in front.points],
            hypervolume=_quantize(hv),
            hyperarea_difference=_quantize(diff),
        )
        self.records.append(record)
        if self.writer is not None:
            self.writer.append_generation(record, self.state_dict())
        return record

    def run(self, on_generation: GenerationHook | None = None) -> RunArchive:
        """Advance to the configured generation count or the stop rule."""
        try:
            while self.status == "in_progress":
                record = self.step()
                if on_generation is not None:
                    on_generation(self, record)
        finally:
            if self._owns_evaluator:
                self.evaluator.close()
        return self.as_archive()

    # -- (de)serialization ---------------------------------------------------

    def _individual_dict(self, ind: Individual) -> dict[str, Any]:
        meta = dict(ind.eval_meta)
        wall_time = meta.pop("wall_time_ms", 0)
        item: dict[str, Any] = {
            "genome": ind.genome.text,
            "objectives": dict(zip(self.config.objectives, ind.objectives)),
            "rank": ind.rank,
            "crowding": ind.crowding,
            "eval": meta or None,
        }
        item["timing"] = {"wall_time_ms": wall_time}
        return item

    def _individual_from_dict(self, item: dict[str, Any]) -> Individual:
        meta = dict(item.get("eval") or {})
        if "timing" in item:
            meta["wall_time_ms"] = item["timing"].get("wall_time_ms", 0)
        return Individual(
            genome=parse_genome(item["genome"]),
            objectives=tuple(item["objectives"][n] for n in self.config.objectives),
            rank=item.get("rank"),
            crowding=item.get("crowding"),
            eval_meta=meta,
        )

    def state_dict(self) -> dict[str, Any]:
        assert self.population is not None
        return {
            "status": self.status,
            "generation": self.generation,
            "rng_state": self.rng.bit_generator.state,
            "population": [self._individual_dict(i) for i in self.population.individuals],
            "archive": [self._individual_dict(i) for i in self.archive_individuals],
            "eval_cache": self.eval_cache,
            "seen": sorted(self.seen),
            "ref_point": list(self.ref_point) if self.ref_point else None,
            "box_area": self.box_area,
            "hv_prev": self.hv_prev,
            "stop_streak": self.stop_streak,
            "unique_evaluations": self.unique_evaluations,
            "cache_hits": self.cache_hits,
        }

    def load_state(self, state: dict[str, Any]) -> None:
        self.status = state["status"]
        self.generation = state["generation"]
        self.rng.bit_generator.state = state["rng_state"]
        self.population = Population(
            [self._individual_from_dict(d) for d in state["population"]],
            generation=self.generation,
        )
        self.archive_individuals = [
            self._individual_from_dict(d) for d in state["archive"]
        ]
        self.eval_cache = dict(state["eval_cache"])
        self.seen = set(state["seen"])
        ref = state.get("ref_point")
        self.ref_point = tuple(ref) if ref else None
        self.box_area = state.get("box_area")
        self.hv_prev = state["hv_prev"]
        self.stop_streak = state["stop_streak"]
        self.unique_evaluations = state["unique_evaluations"]
        self.cache_hits = state["cache_hits"]

    def as_archive(self) -> RunArchive:
        return RunArchive(
            config=self.config,
            config_hash=self.config.config_hash(),
            records=list(self.records),
            eval_cache=dict(self.eval_cache),
            status=self.status,
            extras={
                "unique_evaluations": self.unique_evaluations,
                "cache_hits": self.cache_hits,
                "ref_point": list(self.ref_point) if self.ref_point else None,
            },
        )


def evolve(config: SearchConfig, evaluator: Evaluator | None = None,
           cost_model: CostModel | None = None, writer: RunWriter | None = None,
           on_generation: GenerationHook | None = None) -> RunArchive:
    """Run a full search from scratch and return its archive."""
    engine = EvolutionEngine(config, evaluator, cost_model, writer)
    return engine.run(on_generation)
