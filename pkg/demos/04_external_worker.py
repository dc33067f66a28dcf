"""Evaluation through an external worker process.

The engine can delegate accuracy measurement to any subprocess speaking the
line-delimited JSON protocol; the reference worker in ``adapter/`` answers
with the same deterministic surrogate the in-process evaluator uses, so the
two paths produce identical searches. A real deployment would swap in a
worker that loads supernet weights and measures segmentation error on a GPU.
"""

import os
import sys
from pathlib import Path

from paretonas import EvaluatorSpec, SearchConfig, Space, evolve

ADAPTER_SRC = Path(__file__).resolve().parents[1] / "adapter" / "src"
if not ADAPTER_SRC.exists():
    raise SystemExit("reference worker not found; expected it under adapter/src")
os.environ["PYTHONPATH"] = (
    f"{ADAPTER_SRC}{os.pathsep}{os.environ['PYTHONPATH']}"
    if os.environ.get("PYTHONPATH") else str(ADAPTER_SRC)
)

base = dict(
    space=Space.XCEPTION,
    objectives=("error", "flops"),
    population=12,
    generations=5,
    seed=11,
)

in_process = evolve(SearchConfig(**base))
via_worker = evolve(SearchConfig(
    **base,
    evaluator=EvaluatorSpec(kind="external",
                            command=f"{sys.executable} -m surrogate_worker"),
    eval_timeout_s=60.0,
))

print(f"in-process evaluations: {in_process.extras['unique_evaluations']}")
print(f"via worker evaluations: {via_worker.extras['unique_evaluations']}")
same = in_process.trace(include_provenance=False) == \
    via_worker.trace(include_provenance=False)
print(f"identical search traces: {same}")
print()

final = via_worker.records[-1]
print("final front found through the worker:")
for point in final.front:
    objs = point["objectives"]
    print(f"  error {objs['error']:6.2f}%   {objs['flops']/1e9:7.2f} GFLOPs")
