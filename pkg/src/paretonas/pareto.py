"""Pareto-front extraction, 2-D hypervolume, and gene-frequency analysis.

All objectives are minimized.  Point ``a`` dominates ``b`` when it is no
worse in every objective and strictly better in at least one.  Hypervolume
is the area dominated by a front and bounded by a reference point that every
counted front point must strictly dominate; it is computed by an exact
staircase sweep over the front sorted by its first objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import EvaluationError
from .genome import bit_labels, parse_genome

if TYPE_CHECKING:  # pragma: no cover
    from .nsga2 import Individual

__all__ = [
    "ParetoFront",
    "dominates",
    "extract_front",
    "hypervolume_2d",
    "hyperarea_difference",
    "filter_dominating",
    "gene_frequency",
    "labeled_gene_frequency",
]


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is component-wise <= ``b`` and < in at least one."""
    not_worse = all(x <= y for x, y in zip(a, b))
    return not_worse and any(x < y for x, y in zip(a, b))


@dataclass(frozen=True)
class ParetoFront:
    """A mutually non-dominated point set, sorted by its first objective."""

    points: tuple[tuple[tuple[float, ...], str], ...]  # (objectives, genome text)
    generation: int
    objective_names: tuple[str, ...]

    @property
    def objectives(self) -> list[tuple[float, ...]]:
        return [objs for objs, _ in self.points]

    @property
    def genomes(self) -> list[str]:
        return [g for _, g in self.points]

    def __len__(self) -> int:
        return len(self.points)


def extract_front(individuals: Iterable["Individual"], generation: int = 0,
                  objective_names: Sequence[str] = ()) -> ParetoFront:
    """Non-dominated subset of evaluated individuals, deduplicated by
    objective vector and sorted ascending by the first objective."""
    entries: list[tuple[tuple[float, ...], str]] = []
    for ind in individuals:
        if ind.objectives is None:
            raise EvaluationError(f"individual {ind.genome.text} has no objectives")
        if any(math.isnan(v) for v in ind.objectives):
            raise EvaluationError(f"NaN objective for {ind.genome.text}")
        entries.append((tuple(ind.objectives), ind.genome.text))
    entries.sort()
    kept: list[tuple[tuple[float, ...], str]] = []
    seen: set[tuple[float, ...]] = set()
    for objs, text in entries:
        if objs in seen:
            continue
        if any(dominates(other, objs) for other, _ in entries if other != objs):
            continue
        seen.add(objs)
        kept.append((objs, text))
    return ParetoFront(tuple(kept), generation, tuple(objective_names))


def _front_points(front: ParetoFront | Iterable[Sequence[float]]) -> list[tuple[float, ...]]:
    if isinstance(front, ParetoFront):
        return [tuple(p) for p in front.objectives]
    return [tuple(p) for p in front]


def hypervolume_2d(front: ParetoFront | Iterable[Sequence[float]],
                   ref: Sequence[float]) -> float:
    """Exact dominated area between a 2-D front and a reference point.

    Every point must strictly dominate ``ref``.  Dominated or duplicate
    points in the input contribute nothing.
    """
    points = _front_points(front)
    if len(ref) != 2:
        raise EvaluationError(f"hypervolume is limited to 2 objectives, ref has {len(ref)}")
    if not points:
        return 0.0
    for p in points:
        if len(p) != 2:
            raise EvaluationError(f"hypervolume is limited to 2 objectives, point has {len(p)}")
        if not (p[0] < ref[0] and p[1] < ref[1]):
            raise EvaluationError(f"point {p} does not strictly dominate ref {tuple(ref)}")
    points.sort()
    area = 0.0
    best_y = math.inf
    # Sweep left to right; each staircase step spans to the next lower-y point.
    staircase = []
    for x, y in points:
        if y < best_y:
            staircase.append((x, y))
            best_y = y
    for (x, y), nxt in zip(staircase, staircase[1:] + [(ref[0], None)]):
        area += (nxt[0] - x) * (ref[1] - y)
    return area


def hyperarea_difference(front_prev: ParetoFront | Iterable[Sequence[float]],
                         front_curr: ParetoFront | Iterable[Sequence[float]],
                         ref: Sequence[float]) -> float:
    """Hypervolume gained from one front to the next under a shared ref."""
    return hypervolume_2d(front_curr, ref) - hypervolume_2d(front_prev, ref)


def filter_dominating(points: Iterable[Sequence[float]],
                      ref: Sequence[float]) -> list[tuple[float, ...]]:
    """Subset of points that strictly dominate ``ref`` (usable for hypervolume)."""
    return [tuple(p) for p in points if all(v < r for v, r in zip(p, ref))]


def gene_frequency(front: ParetoFront) -> list[float]:
    """Per-bit activation frequency (fraction of front members with bit=1)."""
    genomes = [parse_genome(text) for text in front.genomes]
    if not genomes:
        raise EvaluationError("cannot compute gene frequencies of an empty front")
    spaces = {g.space for g in genomes}
    if len(spaces) > 1:
        raise EvaluationError(f"front mixes spaces: {sorted(s.value for s in spaces)}")
    n = len(genomes)
    length = len(genomes[0].bits)
    return [sum(g.bits[i] for g in genomes) / n for i in range(length)]


def labeled_gene_frequency(front: ParetoFront) -> list[tuple[int, str, float]]:
    """Gene frequencies paired with (bit index, decoded field label)."""
    freqs = gene_frequency(front)
    space = parse_genome(front.genomes[0]).space
    labels = bit_labels(space)
    return [(i, labels[i], f) for i, f in enumerate(freqs)]
