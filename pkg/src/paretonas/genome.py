"""Bitstring genomes for the two supernet search spaces and their codecs.

A genome is a fixed-length bit sequence; every bit pattern of the correct
length decodes to a legal architecture, so mutation and crossover are closed
over the space.  Two spaces are supported:

``xception`` (22 bits)::

    bits[0:2]   entry-flow stride of the last downsampling stage,
                MSB-first code c -> stride c + 1            (1, 2, 3, 4)
    bits[2:4]   middle-flow atrous rate, code c -> c + 1    (1, 2, 3, 4)
    bits[4]     exit-flow atrous rate pair: 0 -> (1, 2), 1 -> (2, 4)
    bits[5]     pyramid-pooling rates: 0 -> (6, 12, 18), 1 -> (12, 24, 36)
    bits[6:22]  presence flags for middle-flow blocks 1..16

``mobilenetv2`` (23 bits)::

    bits[0]     bottleneck-layer 2 stride: 0 -> 2, 1 -> 3
    bits[1]     bottleneck-layer 3 stride: 0 -> 2, 1 -> 3
    bits[2]     bottleneck-layer 14 stride: 0 -> 1, 1 -> 2
    bits[3]     bottleneck-layer 17 stride: 0 -> 1, 1 -> 2
    bits[4:7]   dilation of layers 12, 13, 14: 0 -> 1, 1 -> 2
    bits[7:13]  dilation of layers 15, 16, 17, two bits each (MSB first),
                code c -> rate c + 1                        (1, 2, 3, 4)
    bits[13:23] free presence flags for the grouped bottleneck layers, in
                group order 24/32/64/96/160 channels; the first layer of
                every group is fixed present and has no bit

The bit ordering and code-to-value maps are this package's canonical layout;
runs are reproducible byte-for-byte against it.  Genome text form is
``"<space>:<bits>"``, e.g. ``"xception:0100001111111111111111"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import CodecError

__all__ = [
    "Space",
    "Genome",
    "XceptionArch",
    "MobileNetV2Arch",
    "GENOME_LENGTH",
    "decode",
    "encode",
    "decode_xception",
    "encode_xception",
    "decode_mobilenetv2",
    "encode_mobilenetv2",
    "space_cardinality",
    "supernet_genome",
    "genome_from_int",
    "parse_genome",
    "format_genome",
    "bit_labels",
]


class Space(Enum):
    """Identifies a search space (backbone family) and its genome layout."""

    XCEPTION = "xception"
    MOBILENETV2 = "mobilenetv2"


GENOME_LENGTH = {Space.XCEPTION: 22, Space.MOBILENETV2: 23}

EXIT_ATROUS_CHOICES = ((1, 2), (2, 4))
ASPP_RATE_CHOICES = ((6, 12, 18), (12, 24, 36))

# Grouped bottleneck layers of the second backbone: (channels, group size).
MOBILENETV2_GROUPS = ((24, 2), (32, 3), (64, 4), (96, 3), (160, 3))


@dataclass(frozen=True, slots=True)
class Genome:
    """A fixed-length bitstring tied to one search space."""

    space: Space
    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        expected = GENOME_LENGTH.get(self.space)
        if expected is None:
            raise CodecError(f"unknown space: {self.space!r}")
        if len(self.bits) != expected:
            raise CodecError(
                f"{self.space.value} genome must have {expected} bits, got {len(self.bits)}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise CodecError("genome bits must be 0 or 1")

    @property
    def text(self) -> str:
        """Canonical text form ``"<space>:<bits>"``."""
        return f"{self.space.value}:{''.join('1' if b else '0' for b in self.bits)}"

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True, slots=True)
class XceptionArch:
    """Decoded hyperparameters for the 22-bit space."""

    entry_stride: int
    middle_atrous: int
    exit_atrous: tuple[int, int]
    aspp_rates: tuple[int, int, int]
    middle_blocks: tuple[int, ...]  # 16 presence flags, blocks 1..16

    @property
    def active_blocks(self) -> int:
        return sum(self.middle_blocks)


@dataclass(frozen=True, slots=True)
class MobileNetV2Arch:
    """Decoded hyperparameters for the 23-bit space.

    ``strides`` covers bottleneck layers (2, 3, 14, 17); ``dilations`` covers
    layers 12..17; ``group_layers`` holds one presence vector per channel
    group, first element always 1.
    """

    strides: tuple[int, int, int, int]
    dilations: tuple[int, int, int, int, int, int]
    group_layers: tuple[tuple[int, ...], ...]

    @property
    def active_group_layers(self) -> int:
        return sum(sum(g) for g in self.group_layers)


def _require_space(genome: Genome, space: Space) -> None:
    if genome.space is not space:
        raise CodecError(f"expected a {space.value} genome, got {genome.space.value}")


def decode_xception(genome: Genome) -> XceptionArch:
    """Decode a 22-bit genome; total over all bit patterns."""
    _require_space(genome, Space.XCEPTION)
    b = genome.bits
    return XceptionArch(
        entry_stride=2 * b[0] + b[1] + 1,
        middle_atrous=2 * b[2] + b[3] + 1,
        exit_atrous=EXIT_ATROUS_CHOICES[b[4]],
        aspp_rates=ASPP_RATE_CHOICES[b[5]],
        middle_blocks=b[6:22],
    )


def encode_xception(arch: XceptionArch) -> Genome:
    """Inverse of :func:`decode_xception`; validates every field's choice set."""
    if arch.entry_stride not in (1, 2, 3, 4):
        raise CodecError(f"entry_stride {arch.entry_stride} not in 1..4")
    if arch.middle_atrous not in (1, 2, 3, 4):
        raise CodecError(f"middle_atrous {arch.middle_atrous} not in 1..4")
    if arch.exit_atrous not in EXIT_ATROUS_CHOICES:
        raise CodecError(f"exit_atrous {arch.exit_atrous} not in {EXIT_ATROUS_CHOICES}")
    if arch.aspp_rates not in ASPP_RATE_CHOICES:
        raise CodecError(f"aspp_rates {arch.aspp_rates} not in {ASPP_RATE_CHOICES}")
    if len(arch.middle_blocks) != 16 or any(m not in (0, 1) for m in arch.middle_blocks):
        raise CodecError("middle_blocks must be 16 flags of 0/1")
    s = arch.entry_stride - 1
    a = arch.middle_atrous - 1
    bits = (
        s >> 1,
        s & 1,
        a >> 1,
        a & 1,
        EXIT_ATROUS_CHOICES.index(arch.exit_atrous),
        ASPP_RATE_CHOICES.index(arch.aspp_rates),
    ) + tuple(arch.middle_blocks)
    return Genome(Space.XCEPTION, bits)


def decode_mobilenetv2(genome: Genome) -> MobileNetV2Arch:
    """Decode a 23-bit genome; total over all bit patterns."""
    _require_space(genome, Space.MOBILENETV2)
    b = genome.bits
    groups = (
        (1, b[13]),
        (1, b[14], b[15]),
        (1, b[16], b[17], b[18]),
        (1, b[19], b[20]),
        (1, b[21], b[22]),
    )
    return MobileNetV2Arch(
        strides=(b[0] + 2, b[1] + 2, b[2] + 1, b[3] + 1),
        dilations=(
            b[4] + 1,
            b[5] + 1,
            b[6] + 1,
            2 * b[7] + b[8] + 1,
            2 * b[9] + b[10] + 1,
            2 * b[11] + b[12] + 1,
        ),
        group_layers=groups,
    )


def encode_mobilenetv2(arch: MobileNetV2Arch) -> Genome:
    """Inverse of :func:`decode_mobilenetv2`; validates choice sets and the
    mandatory first layer of every group."""
    s = arch.strides
    d = arch.dilations
    if len(s) != 4 or s[0] not in (2, 3) or s[1] not in (2, 3) or s[2] not in (1, 2) or s[3] not in (1, 2):
        raise CodecError(f"strides {s} outside the (2|3, 2|3, 1|2, 1|2) choice sets")
    if len(d) != 6 or any(x not in (1, 2) for x in d[:3]) or any(x not in (1, 2, 3, 4) for x in d[3:]):
        raise CodecError(f"dilations {d} outside the (1|2 x3, 1..4 x3) choice sets")
    if len(arch.group_layers) != len(MOBILENETV2_GROUPS):
        raise CodecError(f"expected {len(MOBILENETV2_GROUPS)} group vectors")
    free_bits: list[int] = []
    for vec, (channels, size) in zip(arch.group_layers, MOBILENETV2_GROUPS):
        if len(vec) != size:
            raise CodecError(f"{channels}-channel group must have {size} flags, got {len(vec)}")
        if vec[0] != 1:
            raise CodecError(f"first layer of the {channels}-channel group is mandatory")
        if any(x not in (0, 1) for x in vec):
            raise CodecError("group flags must be 0/1")
        free_bits.extend(vec[1:])
    bits = (
        s[0] - 2,
        s[1] - 2,
        s[2] - 1,
        s[3] - 1,
        d[0] - 1,
        d[1] - 1,
        d[2] - 1,
        (d[3] - 1) >> 1,
        (d[3] - 1) & 1,
        (d[4] - 1) >> 1,
        (d[4] - 1) & 1,
        (d[5] - 1) >> 1,
        (d[5] - 1) & 1,
    ) + tuple(free_bits)
    return Genome(Space.MOBILENETV2, bits)


def decode(genome: Genome) -> XceptionArch | MobileNetV2Arch:
    """Decode a genome of either space."""
    if genome.space is Space.XCEPTION:
        return decode_xception(genome)
    return decode_mobilenetv2(genome)


def encode(arch: XceptionArch | MobileNetV2Arch) -> Genome:
    """Encode an architecture of either space."""
    if isinstance(arch, XceptionArch):
        return encode_xception(arch)
    if isinstance(arch, MobileNetV2Arch):
        return encode_mobilenetv2(arch)
    raise CodecError(f"cannot encode {type(arch).__name__}")


def space_cardinality(space: Space) -> int:
    """Exact number of distinct genomes (= architectures) in a space."""
    if space is Space.XCEPTION:
        return 4 * 4 * 2 * 2 * 2**16
    if space is Space.MOBILENETV2:
        return 2**4 * 2**3 * 4**3 * 2**10
    raise CodecError(f"unknown space: {space!r}")


def supernet_genome(space: Space) -> Genome:
    """The genome encoding the full (unreduced) supernet of a space."""
    if space is Space.XCEPTION:
        return encode_xception(
            XceptionArch(
                entry_stride=2,
                middle_atrous=1,
                exit_atrous=(1, 2),
                aspp_rates=(6, 12, 18),
                middle_blocks=(1,) * 16,
            )
        )
    return encode_mobilenetv2(
        MobileNetV2Arch(
            strides=(2, 2, 1, 1),
            dilations=(2, 2, 2, 4, 4, 4),
            group_layers=tuple((1,) * size for _, size in MOBILENETV2_GROUPS),
        )
    )


def genome_from_int(space: Space, value: int) -> Genome:
    """Build a genome from an integer's binary digits, MSB first.

    Enumerating ``range(space_cardinality(space))`` visits every genome once.
    """
    length = GENOME_LENGTH[space]
    if not 0 <= value < (1 << length):
        raise CodecError(f"value {value} out of range for a {length}-bit genome")
    return Genome(space, tuple((value >> shift) & 1 for shift in range(length - 1, -1, -1)))


def parse_genome(text: str) -> Genome:
    """Parse the canonical text form ``"<space>:<bits>"``."""
    space_name, sep, digits = text.strip().partition(":")
    if not sep:
        raise CodecError(f"genome text {text!r} lacks a '<space>:' prefix")
    try:
        space = Space(space_name)
    except ValueError:
        raise CodecError(f"unknown space {space_name!r}") from None
    if any(c not in "01" for c in digits):
        raise CodecError(f"genome bits {digits!r} contain characters other than 0/1")
    return Genome(space, tuple(1 if c == "1" else 0 for c in digits))


def format_genome(genome: Genome) -> str:
    """Canonical text form of a genome (same as ``genome.text``)."""
    return genome.text


def bit_labels(space: Space) -> list[str]:
    """Human-readable label for every bit position, used in gene reports."""
    if space is Space.XCEPTION:
        labels = [
            "entry_stride[hi]",
            "entry_stride[lo]",
            "middle_atrous[hi]",
            "middle_atrous[lo]",
            "exit_atrous_sel",
            "aspp_rates_sel",
        ]
        labels += [f"middle_block_{i:02d}" for i in range(1, 17)]
        return labels
    labels = [
        "stride_l2",
        "stride_l3",
        "stride_l14",
        "stride_l17",
        "dilation_l12",
        "dilation_l13",
        "dilation_l14",
        "dilation_l15[hi]",
        "dilation_l15[lo]",
        "dilation_l16[hi]",
        "dilation_l16[lo]",
        "dilation_l17[hi]",
        "dilation_l17[lo]",
    ]
    for channels, size in MOBILENETV2_GROUPS:
        labels += [f"group{channels}_layer{i}" for i in range(2, size + 1)]
    return labels
