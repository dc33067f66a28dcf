"""A full multi-objective search with the synthetic evaluator.

Reproduces the shape of the published experiments: population 12, 20
generations, minimizing (error, FLOPs) over the 22-bit space. Prints the
archive front as it develops, the hypervolume trail used by the stop rule,
and the per-bit gene frequencies of the final front.
"""

from paretonas import ParetoFront, SearchConfig, Space, evolve
from paretonas.pareto import labeled_gene_frequency

config = SearchConfig(
    space=Space.XCEPTION,
    objectives=("error", "flops"),
    population=12,
    generations=20,
    seed=7,
)

archive = evolve(config)
print(f"status: {archive.status}, evaluations: {archive.extras['unique_evaluations']}")
print()

print("gen  front  hypervolume gain")
for record in archive.records:
    if record.generation in (1, 5, 10, 15, 20):
        print(f" {record.generation:2d}   {record.front_size:3d}   "
              f"{record.hyperarea_difference:,.0f}")
print()

final = archive.records[-1]
print("final archive front (error % vs GFLOPs):")
for point in final.front:
    objs = point["objectives"]
    print(f"  {objs['error']:6.2f}   {objs['flops']/1e9:7.2f}   {point['genome']}")
print()

# Which bits survived selection? Boundary blocks tend to stay active.
points = tuple(
    (tuple(p["objectives"][n] for n in config.objectives), p["genome"])
    for p in final.front
)
front = ParetoFront(points, final.generation, config.objectives)
print("gene frequencies over the final front:")
for index, label, freq in labeled_gene_frequency(front):
    bar = "#" * round(freq * 20)
    print(f"  {index:2d} {label:18s} {freq:5.2f} {bar}")
