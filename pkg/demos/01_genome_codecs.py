"""Genomes and codecs: bit layouts, round-trips, and space sizes.

Every architecture is a fixed-length bitstring. This script walks through
encoding/decoding in both search spaces and shows that any bit pattern is a
legal candidate, which is what lets mutation and crossover run unchecked.
"""

from paretonas import (
    Space,
    decode_mobilenetv2,
    decode_xception,
    encode_xception,
    genome_from_int,
    parse_genome,
    space_cardinality,
    supernet_genome,
)

# The unreduced supernets, as genomes.
for space in Space:
    g = supernet_genome(space)
    print(f"{space.value:12s} supernet  {g.text}")
print()

# Decode the 22-bit supernet genome field by field.
arch = decode_xception(supernet_genome(Space.XCEPTION))
print("entry stride:        ", arch.entry_stride)
print("middle atrous rate:  ", arch.middle_atrous)
print("exit atrous rates:   ", arch.exit_atrous)
print("pyramid rates:       ", arch.aspp_rates)
print("middle-flow blocks:  ", "".join(map(str, arch.middle_blocks)))
print()

# A reduced variant: stride 3, two middle blocks dropped.
variant = parse_genome("xception:1000001111111011011111")
decoded = decode_xception(variant)
print(f"variant {variant.text}")
print(f"  stride {decoded.entry_stride}, {decoded.active_blocks}/16 blocks active")
assert encode_xception(decoded) == variant  # codecs invert each other
print()

# The 23-bit space: strides, dilations, and grouped layer masks.
mob = decode_mobilenetv2(supernet_genome(Space.MOBILENETV2))
print("bottleneck strides (layers 2,3,14,17):", mob.strides)
print("dilations (layers 12..17):            ", mob.dilations)
print("group masks:", " ".join("".join(map(str, g)) for g in mob.group_layers))
print()

# Every bit pattern decodes; the spaces are exactly these sizes.
for space in Space:
    n = space_cardinality(space)
    print(f"{space.value:12s} {n:>9,} distinct architectures")
    for probe in (0, 1, n // 2, n - 1):
        g = genome_from_int(space, probe)
        decode_xception(g) if space is Space.XCEPTION else decode_mobilenetv2(g)
print("\nall probed genomes decoded fine")
