"""Elitist multi-objective GA primitives: non-dominated sorting, crowding
distance, crowded binary tournament, uniform crossover, per-bit mutation, and
population seeding.

All objectives are minimized.  Sorting follows the classic fast
non-dominated procedure: front 0 is the non-dominated set, front i+1 is the
non-dominated set once fronts <= i are removed.  Crowding distance assigns
+inf to the boundary points of each objective and a normalized neighbour-gap
sum to interior points; degenerate objectives (max == min) contribute zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import CodecError, ConfigError, EvaluationError
from .genome import GENOME_LENGTH, Genome, Space, supernet_genome
from .pareto import dominates

__all__ = [
    "Individual",
    "Population",
    "fast_nondominated_sort",
    "crowding_distance",
    "crowded_wins",
    "tournament_select",
    "crossover",
    "mutate",
    "random_genome",
    "seed_population",
]


@dataclass
class Individual:
    """A genome with its (optional) objective vector and NSGA-II bookkeeping."""

    genome: Genome
    objectives: tuple[float, ...] | None = None
    rank: int | None = None
    crowding: float | None = None
    eval_meta: dict[str, Any] = field(default_factory=dict)


@dataclass
class Population:
    individuals: list[Individual]
    generation: int = 0

    def __len__(self) -> int:
        return len(self.individuals)


def _check_objectives(objectives: Sequence[Sequence[float]]) -> None:
    if not objectives:
        return
    k = len(objectives[0])
    for vec in objectives:
        if len(vec) != k:
            raise EvaluationError("objective vectors differ in length")
        for v in vec:
            if math.isnan(v) or math.isinf(v):
                raise EvaluationError(f"non-finite objective value {v} in {tuple(vec)}")


def fast_nondominated_sort(objectives: Sequence[Sequence[float]]) -> list[list[int]]:
    """Partition indices into fronts; every index appears in exactly one."""
    _check_objectives(objectives)
    n = len(objectives)
    if n == 0:
        return []
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for i in range(n):
        oi = objectives[i]
        for j in range(i + 1, n):
            oj = objectives[j]
            if dominates(oi, oj):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif dominates(oj, oi):
                dominated_by[j].append(i)
                domination_count[i] += 1
    fronts: list[list[int]] = []
    current = [i for i in range(n) if domination_count[i] == 0]
    while current:
        fronts.append(current)
        nxt: list[int] = []
        for i in current:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        nxt.sort()
        current = nxt
    return fronts


def crowding_distance(front_objectives: Sequence[Sequence[float]]) -> list[float]:
    """Per-individual crowding distance within one front."""
    n = len(front_objectives)
    if n == 0:
        raise EvaluationError("crowding distance of an empty front")
    _check_objectives(front_objectives)
    distance = [0.0] * n
    k = len(front_objectives[0])
    for m in range(k):
        order = sorted(range(n), key=lambda i: front_objectives[i][m])
        lo = front_objectives[order[0]][m]
        hi = front_objectives[order[-1]][m]
        distance[order[0]] = math.inf
        distance[order[-1]] = math.inf
        span = hi - lo
        if span <= 0.0:
            continue  # degenerate objective contributes nothing
        for pos in range(1, n - 1):
            i = order[pos]
            if distance[i] == math.inf:
                continue
            gap = front_objectives[order[pos + 1]][m] - front_objectives[order[pos - 1]][m]
            distance[i] += gap / span
    return distance


def crowded_wins(a: Individual, b: Individual) -> bool | None:
    """Crowded-comparison: True if a beats b, False if b beats a, None on tie."""
    if a.rank is None or b.rank is None or a.crowding is None or b.crowding is None:
        raise EvaluationError("tournament requires ranked and crowded individuals")
    if a.rank != b.rank:
        return a.rank < b.rank
    if a.crowding != b.crowding:
        return a.crowding > b.crowding
    return None


def tournament_select(population: Population | Sequence[Individual],
                      rng: np.random.Generator) -> Individual:
    """Binary tournament under the crowded comparison, random on full ties."""
    inds = population.individuals if isinstance(population, Population) else list(population)
    i = int(rng.integers(len(inds)))
    j = int(rng.integers(len(inds)))
    a, b = inds[i], inds[j]
    verdict = crowded_wins(a, b)
    if verdict is None:
        return a if rng.random() < 0.5 else b
    return a if verdict else b


def crossover(a: Genome, b: Genome, rate: float,
              rng: np.random.Generator) -> tuple[Genome, Genome]:
    """Uniform crossover applied with probability ``rate``: each bit is
    independently swapped between the parents with probability 0.5."""
    if a.space is not b.space:
        raise CodecError(f"cannot cross {a.space.value} with {b.space.value}")
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"crossover rate must be in [0, 1], got {rate}")
    if rng.random() >= rate:
        return a, b
    swap = rng.integers(0, 2, size=len(a.bits))
    child_a = tuple(y if s else x for x, y, s in zip(a.bits, b.bits, swap))
    child_b = tuple(x if s else y for x, y, s in zip(a.bits, b.bits, swap))
    return Genome(a.space, child_a), Genome(b.space, child_b)


def mutate(genome: Genome, per_bit_rate: float, rng: np.random.Generator) -> Genome:
    """Flip each bit independently with probability ``per_bit_rate``."""
    if not 0.0 <= per_bit_rate <= 1.0:
        raise ConfigError(f"mutation rate must be in [0, 1], got {per_bit_rate}")
    flips = rng.random(len(genome.bits)) < per_bit_rate
    return Genome(genome.space, tuple(1 - b if f else b for b, f in zip(genome.bits, flips)))


def random_genome(space: Space, rng: np.random.Generator) -> Genome:
    return Genome(space, tuple(int(b) for b in rng.integers(0, 2, size=GENOME_LENGTH[space])))


def seed_population(space: Space, m: int, rng: int | np.random.Generator,
                    inject: Sequence[Genome] = ()) -> Population:
    """Initial population: distinct random genomes plus the supernet genome.

    The supernet genome always occupies the last slot so the search starts
    from at least one known high-accuracy model.  Random seeds are drawn
    until distinct (from each other, the supernet, and any injected genomes)
    so the initial generation evaluates exactly ``m`` unique candidates.
    """
    if m < 2:
        raise ConfigError(f"population must be at least 2, got {m}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    anchor = supernet_genome(space)
    chosen: list[Genome] = []
    taken = {anchor.text}
    for g in inject:
        if g.space is not space:
            raise ConfigError(f"injected genome {g.text} is not in space {space.value}")
        if g.text not in taken and len(chosen) < m - 1:
            taken.add(g.text)
            chosen.append(g)
    while len(chosen) < m - 1:
        g = random_genome(space, rng)
        if g.text in taken:
            continue
        taken.add(g.text)
        chosen.append(g)
    chosen.append(anchor)
    return Population([Individual(g) for g in chosen], generation=1)
