"""Analytical cost model: layer graphs, FLOPs/params, latency proxy.

Builds the layer graph of the full Xception-backbone segmentation network at
513x513, compares its analytical cost with published measurements of the same
model, and shows how the entry-flow stride and block mask trade work away.
"""

import io

from paretonas import (
    Space,
    ThroughputModel,
    XceptionArch,
    build_layer_graph,
    cost_report,
    count_flops,
    count_params,
    decode_mobilenetv2,
    latency_proxy,
    parse_genome,
    supernet_genome,
)
from paretonas.cost import write_layer_csv

baseline = XceptionArch(2, 1, (1, 2), (6, 12, 18), (1,) * 16)
graph = build_layer_graph(baseline, 513)
params = count_params(graph)
flops = count_flops(graph)

print(f"layer records: {len(graph.records)}")
print(f"params: {params:,}  (published: 41,260,000 for the same model)")
print(f"flops:  {flops / 1e9:,.2f} G  (published: 101.47 G; conventions differ)")
print()

# The middle flow dominates cost; each block is exactly 1,618,344 params.
one_off = XceptionArch(2, 1, (1, 2), (6, 12, 18), (0,) + (1,) * 15)
delta = params - count_params(build_layer_graph(one_off, 513))
print(f"params per middle block: {delta:,}")
print()

# Stride sweep: resolution drives FLOPs, never parameters.
print("stride  mid-side  flops(G)  params(M)")
for stride in (1, 2, 3, 4):
    arch = XceptionArch(stride, 1, (1, 2), (6, 12, 18), (1,) * 16)
    g = build_layer_graph(arch, 513)
    mid = next(r for r in g.records if r.stage == "middle").out_spatial[0]
    print(f"  {stride}       {mid:3d}     {count_flops(g)/1e9:7.2f}   "
          f"{count_params(g)/1e6:6.2f}")
print()

# Latency proxy on the second backbone: the published cycle ordering holds.
model = ThroughputModel()  # 1 MAC/cycle conv, 0.25 depthwise, 10k/layer overhead
rows = {
    "baseline": "mobilenetv2:00001111111111111111111",
    "variant-1": "mobilenetv2:00011101011011111111111",
    "variant-2": "mobilenetv2:01001111001011111111111",
}
print("latency proxy at 384x384 (measured cycles were 2189 > 2085 > 1004 M):")
for name, text in rows.items():
    arch = decode_mobilenetv2(parse_genome(text))
    cycles = latency_proxy(build_layer_graph(arch, 384), model)
    print(f"  {name:10s} {cycles / 1e6:8.0f} M cycles")
print()

# Per-layer breakdown exports as CSV.
buf = io.StringIO()
small = build_layer_graph(decode_mobilenetv2(supernet_genome(Space.MOBILENETV2)), 384)
write_layer_csv(small, cost_report(small), buf)
head = buf.getvalue().splitlines()
print("per-layer CSV (first rows):")
for line in head[:6]:
    print(" ", line)
