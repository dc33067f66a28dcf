"""Deterministic accuracy surrogate, mirrored from the engine's defaults.

The engine's in-process synthetic evaluator computes::

    error = base(space)
          + alpha * removed_units
          + beta  * stride_excess ** 2
          - gamma * [wide pyramid rates]
          + delta * hash_noise(genome_text)

clamped to [0, 100].  This module reimplements the same closed form over the
raw genome text (no shared code with the engine), which is exactly what makes
the protocol-parity test meaningful.  The constants below MUST stay equal to
the engine's published defaults unless the handshake overrides them.

This is also the seam for a real evaluator: replace :func:`measure_error`
with code that subsamples pretrained supernet weights into the decoded
candidate and measures segmentation error on a validation subset.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

GENOME_LENGTH = {"xception": 22, "mobilenetv2": 23}


@dataclass(frozen=True)
class SurrogateConstants:
    base_error_xception: float = 23.14
    base_error_mobilenetv2: float = 33.03
    alpha: float = 0.6
    beta: float = 2.0
    gamma: float = 0.3
    delta: float = 0.2

    @classmethod
    def from_dict(cls, data: dict[str, float]) -> "SurrogateConstants":
        return replace(cls(), **{k: float(v) for k, v in data.items()})


def hash_noise(genome_text: str) -> float:
    """SHA-256 of the genome text mapped onto [-1, 1)."""
    digest = hashlib.sha256(genome_text.encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big")
    return 2.0 * (u / 2.0**64) - 1.0


def parse_genome(text: str) -> tuple[str, list[int]]:
    space, sep, digits = text.strip().partition(":")
    if not sep:
        raise ValueError(f"genome {text!r} lacks a '<space>:' prefix")
    expected = GENOME_LENGTH.get(space)
    if expected is None:
        raise ValueError(f"unknown space {space!r}")
    if len(digits) != expected or any(c not in "01" for c in digits):
        raise ValueError(f"{space} genome needs exactly {expected} bits of 0/1")
    return space, [1 if c == "1" else 0 for c in digits]


def measure_error(genome_text: str, subset_fraction: float,
                  constants: SurrogateConstants) -> float:
    """Surrogate validation-subset error for one genome, in percent.

    ``subset_fraction`` is accepted for interface fidelity; the closed form
    does not depend on it (a real evaluator would).
    """
    if not 0.0 < subset_fraction <= 1.0:
        raise ValueError(f"subset_fraction must be in (0, 1], got {subset_fraction}")
    space, bits = parse_genome(genome_text)
    if space == "xception":
        removed = bits[6:22].count(0)
        stride = 2 * bits[0] + bits[1] + 1
        stride_excess = max(0, stride - 2)
        wide = bits[5] == 1
        base = constants.base_error_xception
    else:
        removed = bits[13:23].count(0)
        stride_excess = bits[0] + bits[1] + bits[2] + bits[3]
        wide = False
        base = constants.base_error_mobilenetv2
    error = (
        base
        + constants.alpha * removed
        + constants.beta * stride_excess**2
        - constants.gamma * (1.0 if wide else 0.0)
        + constants.delta * hash_noise(genome_text)
    )
    return min(100.0, max(0.0, error))
