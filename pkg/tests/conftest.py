"""Shared fixtures: published measurement rows, oracles, adapter discovery."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import numpy as np
import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
ADAPTER_SRC = REPO_ROOT / "adapter" / "src"

# Published cost/error rows for the 22-bit space (genome text, subset error %).
# The first row is the unreduced supernet; the rest are searched variants.
XCEPTION_ROWS = {
    "baseline": ("xception:0100001111111111111111", 23.14),
    "f1": ("xception:1000001111111011011111", 28.88),
    "f2": ("xception:0100001111111011001001", 24.95),
    "p1": ("xception:0100001111011110010100", 27.91),
    "p2": ("xception:0100001111111011011111", 22.68),
    "fp1": ("xception:0100001111111011001101", 23.77),
    "fp2": ("xception:0100001111011010001100", 29.72),
}

# Published rows for the 23-bit space (genome text, subset error %, M cycles).
MOBILENETV2_ROWS = {
    "baseline": ("mobilenetv2:00001111111111111111111", 33.03, 2189e6),
    "l1": ("mobilenetv2:00011101011011111111111", 36.94, 2085e6),
    "l2": ("mobilenetv2:01001111001011111111111", 40.61, 1004e6),
}


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def adapter_command() -> str | None:
    """Worker command for the reference adapter, or None if not present."""
    if (ADAPTER_SRC / "surrogate_worker" / "worker.py").exists():
        return f"{sys.executable} -m surrogate_worker"
    return None


@pytest.fixture
def worker_command(monkeypatch: pytest.MonkeyPatch) -> str:
    command = adapter_command()
    if command is None:
        pytest.skip("reference adapter not present")
    existing = os.environ.get("PYTHONPATH", "")
    joined = str(ADAPTER_SRC) + (os.pathsep + existing if existing else "")
    monkeypatch.setenv("PYTHONPATH", joined)
    return command


def oracle_fronts(objectives: np.ndarray) -> list[list[int]]:
    """O(n^2) pairwise-dominance partition into fronts (test oracle)."""
    objs = np.asarray(objectives, dtype=float)
    n = len(objs)
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    dominates = le & lt  # dominates[i, j]: i dominates j
    remaining = np.ones(n, dtype=bool)
    fronts: list[list[int]] = []
    while remaining.any():
        counts = (dominates & remaining[:, None]).sum(axis=0)
        front = np.flatnonzero(remaining & (counts == 0))
        fronts.append(front.tolist())
        remaining[front] = False
    return fronts


def mc_hypervolume(points, ref, samples: int, rng: np.random.Generator) -> float:
    """Monte Carlo hypervolume estimate (test oracle for the exact sweep)."""
    pts = np.asarray(points, dtype=float)
    lo = pts.min(axis=0)
    box = float(np.prod(np.asarray(ref) - lo))
    xs = rng.uniform(lo[0], ref[0], samples)
    ys = rng.uniform(lo[1], ref[1], samples)
    covered = np.zeros(samples, dtype=bool)
    for px, py in pts:
        covered |= (xs >= px) & (ys >= py)
    return covered.mean() * box
