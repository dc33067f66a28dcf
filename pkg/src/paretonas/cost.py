"""Analytical cost model: layer graphs, FLOPs, parameters, latency proxy.

A decoded architecture expands to an ordered list of primitive layer records
(convolutions, batchnorms, pools, upsamples, concats) with same-padding shape
propagation ``side_out = ceil(side_in / stride)``.  Costs are exact integer
counts per layer:

* parameters: ``kh*kw*cin*cout`` for a full convolution, ``kh*kw*cin`` for a
  depthwise one, ``cin*cout`` for a pointwise one, ``2*channels`` trainable
  scalars per batchnorm, zero elsewhere;
* FLOPs: two per multiply-accumulate, plus two per element processed for
  batchnorm/pool/upsample;
* latency proxy: MACs divided by a per-kind throughput, plus a fixed
  per-layer overhead.

Atrous/dilation rates are recorded on the records but never change shapes or
parameter counts.  The spatial plan is derived from the stride fields alone:
presence masks add or remove layers but never alter the feature-map sizes of
the layers that remain, which keeps cost strictly monotone in the masks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import IO

from .errors import ConfigError
from .genome import MobileNetV2Arch, Space, XceptionArch

__all__ = [
    "LayerKind",
    "LayerRecord",
    "LayerGraph",
    "LayerCost",
    "CostReport",
    "ThroughputModel",
    "DEFAULT_INPUT_SIDE",
    "NUM_CLASSES",
    "build_layer_graph",
    "count_params",
    "count_flops",
    "latency_proxy",
    "cost_report",
    "write_layer_csv",
    "CostModel",
]


class LayerKind(Enum):
    CONV = "conv"
    DEPTHWISE_CONV = "depthwise_conv"
    POINTWISE_CONV = "pointwise_conv"
    POOL = "pool"
    UPSAMPLE = "upsample"
    CONCAT = "concat"
    BATCHNORM = "batchnorm"


@dataclass(frozen=True, slots=True)
class LayerRecord:
    kind: LayerKind
    kernel: tuple[int, int]
    in_channels: int
    out_channels: int
    stride: int
    dilation: int
    out_spatial: tuple[int, int]
    stage: str


@dataclass(frozen=True, slots=True)
class LayerGraph:
    """Ordered layer records for one architecture at one input resolution."""

    space: Space
    input_side: int
    records: tuple[LayerRecord, ...]

    def stage_flops(self, stage: str) -> int:
        return sum(layer_flops(r) for r in self.records if r.stage == stage)


# Segmentation head width: PASCAL VOC's 20 object classes plus background.
NUM_CLASSES = 21

DEFAULT_INPUT_SIDE = {Space.XCEPTION: 513, Space.MOBILENETV2: 384}


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class _GraphBuilder:
    def __init__(self) -> None:
        self.records: list[LayerRecord] = []

    def add(
        self,
        kind: LayerKind,
        kernel: tuple[int, int],
        cin: int,
        cout: int,
        side: int,
        stage: str,
        stride: int = 1,
        dilation: int = 1,
    ) -> None:
        self.records.append(
            LayerRecord(kind, kernel, cin, cout, stride, dilation, (side, side), stage)
        )

    def conv(self, cin: int, cout: int, side: int, stage: str, k: int = 3,
             stride: int = 1, dilation: int = 1, batchnorm: bool = True) -> None:
        self.add(LayerKind.CONV, (k, k), cin, cout, side, stage, stride, dilation)
        if batchnorm:
            self.add(LayerKind.BATCHNORM, (1, 1), cout, cout, side, stage)

    def sep_conv(self, cin: int, cout: int, side: int, stage: str,
                 stride: int = 1, dilation: int = 1) -> None:
        """Depthwise 3x3 + pointwise 1x1, each followed by a batchnorm."""
        self.add(LayerKind.DEPTHWISE_CONV, (3, 3), cin, cin, side, stage, stride, dilation)
        self.add(LayerKind.BATCHNORM, (1, 1), cin, cin, side, stage)
        self.add(LayerKind.POINTWISE_CONV, (1, 1), cin, cout, side, stage)
        self.add(LayerKind.BATCHNORM, (1, 1), cout, cout, side, stage)


def _build_xception_graph(arch: XceptionArch, input_side: int) -> LayerGraph:
    g = _GraphBuilder()
    side = _ceil_div(input_side, 2)

    # Entry flow: two plain convs, then three downsampling residual modules.
    g.conv(3, 32, side, "entry", stride=2)
    g.conv(32, 64, side, "entry")
    for cin, cout, stride in ((64, 128, 2), (128, 256, 2), (256, 728, arch.entry_stride)):
        g.sep_conv(cin, cout, side, "entry")
        g.sep_conv(cout, cout, side, "entry")
        out = _ceil_div(side, stride)
        g.sep_conv(cout, cout, out, "entry", stride=stride)
        g.conv(cin, cout, out, "entry", k=1, stride=stride)  # residual shortcut
        side = out
    mid = side  # == ceil(ceil(input_side / 8) / entry_stride)

    # Middle flow: up to 16 identical residual modules of three separable convs.
    for present in arch.middle_blocks:
        if present:
            for _ in range(3):
                g.sep_conv(728, 728, mid, "middle", dilation=arch.middle_atrous)

    # Exit flow: one residual module, then three widening separable convs.
    rate_block, rate_tail = arch.exit_atrous
    g.sep_conv(728, 728, mid, "exit", dilation=rate_block)
    g.sep_conv(728, 1024, mid, "exit", dilation=rate_block)
    g.sep_conv(1024, 1024, mid, "exit", dilation=rate_block)
    g.conv(728, 1024, mid, "exit", k=1)
    g.sep_conv(1024, 1536, mid, "exit", dilation=rate_tail)
    g.sep_conv(1536, 1536, mid, "exit", dilation=rate_tail)
    g.sep_conv(1536, 2048, mid, "exit", dilation=rate_tail)

    _pyramid_pooling(g, 2048, mid, rates=arch.aspp_rates, separable=True)

    # Decoder: fuse with a low-level tap on the 4x grid of the backbone output.
    dec = 4 * mid
    g.add(LayerKind.UPSAMPLE, (1, 1), 256, 256, dec, "decoder")
    g.conv(256, 48, dec, "decoder", k=1)  # low-level feature projection
    g.add(LayerKind.CONCAT, (1, 1), 304, 304, dec, "decoder")
    g.sep_conv(304, 256, dec, "decoder")
    g.sep_conv(256, 256, dec, "decoder")
    g.conv(256, NUM_CLASSES, dec, "decoder", k=1, batchnorm=False)
    g.add(LayerKind.UPSAMPLE, (1, 1), NUM_CLASSES, NUM_CLASSES, input_side, "decoder")

    return LayerGraph(Space.XCEPTION, input_side, tuple(g.records))


def _pyramid_pooling(g: _GraphBuilder, cin: int, side: int,
                     rates: tuple[int, ...] | None, separable: bool) -> None:
    """Multi-rate pooling head: 1x1 branch, optional atrous branches, global
    image pooling, concat, and a 1x1 projection down to 256 channels."""
    branches = 2
    g.conv(cin, 256, side, "aspp", k=1)
    for r in rates or ():
        branches += 1
        if separable:
            g.sep_conv(cin, 256, side, "aspp", dilation=r)
        else:
            g.conv(cin, 256, side, "aspp", dilation=r)
    g.add(LayerKind.POOL, (side, side), cin, cin, 1, "aspp")
    g.conv(cin, 256, 1, "aspp", k=1)
    g.add(LayerKind.UPSAMPLE, (1, 1), 256, 256, side, "aspp")
    g.add(LayerKind.CONCAT, (1, 1), branches * 256, branches * 256, side, "aspp")
    g.conv(branches * 256, 256, side, "aspp", k=1)


# Inverted-bottleneck plan: (cin, cout, expansion, default stride), layers 1..17.
# The five grouped sections (24/32/64/96/160 channels) span layers 2..16.
# Downsampling happens only at the stem and the four searchable stride layers
# (2, 3, 14, 17); every other layer is stride 1 with atrous compensation, the
# usual output-stride-8 segmentation conversion of this backbone.
_MNV2_PLAN = (
    (32, 16, 1, 1),
    (16, 24, 6, 2),
    (24, 24, 6, 2),
    (24, 32, 6, 1),
    (32, 32, 6, 1),
    (32, 32, 6, 1),
    (32, 64, 6, 1),
    (64, 64, 6, 1),
    (64, 64, 6, 1),
    (64, 64, 6, 1),
    (64, 96, 6, 1),
    (96, 96, 6, 1),
    (96, 96, 6, 1),
    (96, 160, 6, 1),
    (160, 160, 6, 1),
    (160, 160, 6, 1),
    (160, 320, 6, 1),
)

# First layer index (1-based) of each grouped section, in group order.
_MNV2_GROUP_START = (2, 4, 7, 11, 14)
_MNV2_STRIDE_LAYERS = (2, 3, 14, 17)
_MNV2_DILATION_LAYERS = (12, 13, 14, 15, 16, 17)


def _build_mobilenetv2_graph(arch: MobileNetV2Arch, input_side: int) -> LayerGraph:
    g = _GraphBuilder()
    side = _ceil_div(input_side, 2)
    g.conv(3, 32, side, "stem", stride=2)

    strides = {layer: s for layer, s in zip(_MNV2_STRIDE_LAYERS, arch.strides)}
    dilations = {layer: d for layer, d in zip(_MNV2_DILATION_LAYERS, arch.dilations)}
    present = {1: True, 17: True}
    for start, vec in zip(_MNV2_GROUP_START, arch.group_layers):
        for offset, flag in enumerate(vec):
            present[start + offset] = bool(flag)

    for layer, (cin, cout, t, default_stride) in enumerate(_MNV2_PLAN, start=1):
        stride = strides.get(layer, default_stride)
        dilation = dilations.get(layer, 1)
        out = _ceil_div(side, stride)
        # The grid schedule follows the stride fields even across absent
        # layers, so masks never reshape the layers that remain.
        if present[layer]:
            hidden = cin * t
            if t != 1:
                g.add(LayerKind.POINTWISE_CONV, (1, 1), cin, hidden, side, "backbone")
                g.add(LayerKind.BATCHNORM, (1, 1), hidden, hidden, side, "backbone")
            g.add(LayerKind.DEPTHWISE_CONV, (3, 3), hidden, hidden, out, "backbone",
                  stride, dilation)
            g.add(LayerKind.BATCHNORM, (1, 1), hidden, hidden, out, "backbone")
            g.add(LayerKind.POINTWISE_CONV, (1, 1), hidden, cout, out, "backbone")
            g.add(LayerKind.BATCHNORM, (1, 1), cout, cout, out, "backbone")
        side = out

    _pyramid_pooling(g, 320, side, rates=None, separable=False)
    g.conv(256, NUM_CLASSES, side, "head", k=1, batchnorm=False)
    g.add(LayerKind.UPSAMPLE, (1, 1), NUM_CLASSES, NUM_CLASSES, input_side, "head")

    return LayerGraph(Space.MOBILENETV2, input_side, tuple(g.records))


def build_layer_graph(arch: XceptionArch | MobileNetV2Arch,
                      input_side: int | None = None) -> LayerGraph:
    """Expand a decoded architecture into shape-resolved layer records."""
    if isinstance(arch, XceptionArch):
        side = DEFAULT_INPUT_SIDE[Space.XCEPTION] if input_side is None else input_side
        if side <= 0:
            raise ConfigError(f"input_side must be positive, got {side}")
        return _build_xception_graph(arch, side)
    if isinstance(arch, MobileNetV2Arch):
        side = DEFAULT_INPUT_SIDE[Space.MOBILENETV2] if input_side is None else input_side
        if side <= 0:
            raise ConfigError(f"input_side must be positive, got {side}")
        return _build_mobilenetv2_graph(arch, side)
    raise ConfigError(f"cannot build a layer graph for {type(arch).__name__}")


def layer_params(rec: LayerRecord) -> int:
    kh, kw = rec.kernel
    if rec.kind is LayerKind.CONV:
        return kh * kw * rec.in_channels * rec.out_channels
    if rec.kind is LayerKind.DEPTHWISE_CONV:
        return kh * kw * rec.in_channels
    if rec.kind is LayerKind.POINTWISE_CONV:
        return rec.in_channels * rec.out_channels
    if rec.kind is LayerKind.BATCHNORM:
        return 2 * rec.out_channels
    return 0


def layer_flops(rec: LayerRecord) -> int:
    h, w = rec.out_spatial
    kh, kw = rec.kernel
    if rec.kind is LayerKind.CONV:
        return 2 * kh * kw * rec.in_channels * rec.out_channels * h * w
    if rec.kind is LayerKind.DEPTHWISE_CONV:
        return 2 * kh * kw * rec.in_channels * h * w
    if rec.kind is LayerKind.POINTWISE_CONV:
        return 2 * rec.in_channels * rec.out_channels * h * w
    if rec.kind is LayerKind.BATCHNORM:
        return 2 * rec.out_channels * h * w
    if rec.kind is LayerKind.POOL:
        return 2 * kh * kw * rec.in_channels * h * w
    if rec.kind is LayerKind.UPSAMPLE:
        return 2 * rec.out_channels * h * w
    return 0


def count_params(graph: LayerGraph) -> int:
    """Trainable scalars of the whole graph (exact integer sum)."""
    return sum(layer_params(r) for r in graph.records)


def count_flops(graph: LayerGraph) -> int:
    """FLOPs (2 per MAC) of the whole graph (exact integer sum)."""
    return sum(layer_flops(r) for r in graph.records)


def _default_throughput() -> dict[LayerKind, float]:
    rates = {kind: 1.0 for kind in LayerKind}
    rates[LayerKind.DEPTHWISE_CONV] = 0.25
    return rates


@dataclass(frozen=True)
class ThroughputModel:
    """Per-kind MACs-per-cycle rates and a fixed per-layer overhead.

    The defaults (one MAC/cycle for full convolutions, a quarter for
    depthwise, 10k cycles overhead per layer) are placeholders meant to be
    calibrated against device measurements; they reproduce the relative
    ordering of measured cycle counts, not their magnitudes.
    """

    macs_per_cycle: dict[LayerKind, float] = field(default_factory=_default_throughput)
    overhead_cycles_per_layer: float = 10_000.0

    def __post_init__(self) -> None:
        for kind in LayerKind:
            rate = self.macs_per_cycle.get(kind)
            if rate is None or rate <= 0:
                raise ConfigError(f"throughput for {kind.value} must be positive, got {rate}")
        if self.overhead_cycles_per_layer < 0:
            raise ConfigError("per-layer overhead cannot be negative")

    def layer_cycles(self, rec: LayerRecord) -> float:
        macs = layer_flops(rec) / 2
        return macs / self.macs_per_cycle[rec.kind] + self.overhead_cycles_per_layer


def latency_proxy(graph: LayerGraph, model: ThroughputModel) -> float:
    """Proxy cycle count for the whole graph under a throughput model."""
    return sum(model.layer_cycles(r) for r in graph.records)


@dataclass(frozen=True, slots=True)
class LayerCost:
    index: int
    params: int
    flops: int
    cycles: float


@dataclass(frozen=True, slots=True)
class CostReport:
    """Aggregated cost objectives with a per-layer breakdown."""

    flops: int
    params: int
    latency_cycles: float
    per_layer: tuple[LayerCost, ...]


def cost_report(graph: LayerGraph, throughput: ThroughputModel | None = None) -> CostReport:
    """Compute all cost objectives; totals equal the sum of the breakdown."""
    model = throughput if throughput is not None else ThroughputModel()
    rows = tuple(
        LayerCost(i, layer_params(r), layer_flops(r), model.layer_cycles(r))
        for i, r in enumerate(graph.records)
    )
    return CostReport(
        flops=sum(row.flops for row in rows),
        params=sum(row.params for row in rows),
        latency_cycles=sum(row.cycles for row in rows),
        per_layer=rows,
    )


def write_layer_csv(graph: LayerGraph, report: CostReport, stream: IO[str]) -> None:
    """Export the per-layer breakdown as CSV."""
    writer = csv.writer(stream)
    writer.writerow(["index", "kind", "kh", "kw", "cin", "cout", "stride",
                     "dilation", "hout", "wout", "params", "flops", "cycles"])
    for rec, row in zip(graph.records, report.per_layer):
        writer.writerow([
            row.index, rec.kind.value, rec.kernel[0], rec.kernel[1],
            rec.in_channels, rec.out_channels, rec.stride, rec.dilation,
            rec.out_spatial[0], rec.out_spatial[1],
            row.params, row.flops, f"{row.cycles:.6f}",
        ])


class CostModel:
    """Convenience wrapper binding an input resolution and throughput model."""

    def __init__(self, input_side: int | None = None,
                 throughput: ThroughputModel | None = None) -> None:
        self.input_side = input_side
        self.throughput = throughput if throughput is not None else ThroughputModel()

    def graph(self, arch: XceptionArch | MobileNetV2Arch) -> LayerGraph:
        return build_layer_graph(arch, self.input_side)

    def report(self, arch: XceptionArch | MobileNetV2Arch) -> CostReport:
        return cost_report(self.graph(arch), self.throughput)

