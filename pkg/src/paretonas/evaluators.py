"""Candidate accuracy evaluation behind one interface.

Three implementations: a deterministic synthetic surrogate (closed form over
the decoded architecture), a lookup table fed from a CSV of measurements, and
a client for external subprocess workers speaking the line-delimited JSON
protocol of :mod:`paretonas.protocol`.  Real weight-sharing evaluation on a
GPU lives behind the same boundary; workers are where it would plug in.

Surrogate closed form (error in percent, clamped to [0, 100])::

    error = base(space)
          + alpha * removed_units
          + beta  * stride_excess ** 2
          - gamma * [wide pyramid rates selected]
          + delta * hash_noise(genome)

``removed_units`` counts absent optional blocks/layers; ``stride_excess`` is
the total extra downsampling beyond the supernet's strides; ``hash_noise``
maps the genome text through SHA-256 onto [-1, 1).  All constants are pinned
in :class:`SurrogateConstants` and echoed into run archives.
"""

from __future__ import annotations

import hashlib
import shlex
import subprocess
import threading
from dataclasses import dataclass, replace
from queue import Empty, Queue
from typing import Any, Sequence

from .errors import ConfigError, EvaluationError, MissingEntryError, TransportError
from .genome import MobileNetV2Arch, Space, XceptionArch, decode, parse_genome
from .protocol import PROTOCOL_VERSION, parse_frame, write_frame

__all__ = [
    "EvalRequest",
    "EvalResponse",
    "Evaluator",
    "SurrogateConstants",
    "hash_noise",
    "surrogate_error",
    "SyntheticEvaluator",
    "TableEvaluator",
    "ExternalEvaluator",
]

DEFAULT_SUBSET_FRACTION = 0.2


@dataclass(frozen=True)
class EvalRequest:
    genome: str  # canonical text form
    subset_fraction: float = DEFAULT_SUBSET_FRACTION
    objectives: tuple[str, ...] = ("error",)

    def __post_init__(self) -> None:
        if not 0.0 < self.subset_fraction <= 1.0:
            raise ConfigError(f"subset_fraction must be in (0, 1], got {self.subset_fraction}")
        unknown = set(self.objectives) - {"error", "latency"}
        if unknown:
            raise ConfigError(f"evaluator cannot supply objectives {sorted(unknown)}")


@dataclass(frozen=True)
class EvalResponse:
    miou_error_pct: float
    latency_cycles: float | None
    evaluator_id: str
    wall_time_ms: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.miou_error_pct <= 100.0:
            raise EvaluationError(f"miou_error_pct {self.miou_error_pct} outside [0, 100]")


@dataclass(frozen=True)
class SurrogateConstants:
    """Published constants of the synthetic surrogate.

    The bases reproduce the supernets' measured validation-subset errors;
    the remaining coefficients are invented, documented knobs.
    """

    base_error_xception: float = 23.14
    base_error_mobilenetv2: float = 33.03
    alpha: float = 0.6   # error added per removed block/layer
    beta: float = 2.0    # quadratic penalty on extra downsampling
    gamma: float = 0.3   # bonus for the wide pyramid-pooling rates
    delta: float = 0.2   # amplitude of the deterministic per-genome noise

    def base_error(self, space: Space) -> float:
        return self.base_error_xception if space is Space.XCEPTION else self.base_error_mobilenetv2

    def to_dict(self) -> dict[str, float]:
        return {
            "base_error_xception": self.base_error_xception,
            "base_error_mobilenetv2": self.base_error_mobilenetv2,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
        }

    @classmethod
    def from_dict(cls, data: dict[str, float]) -> "SurrogateConstants":
        return replace(cls(), **{k: float(v) for k, v in data.items()})


def hash_noise(genome_text: str) -> float:
    """Deterministic pseudo-noise in [-1, 1) derived from the genome text."""
    digest = hashlib.sha256(genome_text.encode("utf-8")).digest()
    u = int.from_bytes(digest[:8], "big")
    return 2.0 * (u / 2.0**64) - 1.0


def surrogate_error(genome_text: str, constants: SurrogateConstants) -> float:
    """Closed-form stand-in for a measured validation-subset error."""
    genome = parse_genome(genome_text)
    arch = decode(genome)
    if isinstance(arch, XceptionArch):
        removed = 16 - arch.active_blocks
        stride_excess = max(0, arch.entry_stride - 2)
        wide = arch.aspp_rates == (12, 24, 36)
    else:
        assert isinstance(arch, MobileNetV2Arch)
        removed = 15 - arch.active_group_layers
        s = arch.strides
        stride_excess = (s[0] - 2) + (s[1] - 2) + (s[2] - 1) + (s[3] - 1)
        wide = False
    error = (
        constants.base_error(genome.space)
        + constants.alpha * removed
        + constants.beta * stride_excess**2
        - constants.gamma * (1.0 if wide else 0.0)
        + constants.delta * hash_noise(genome_text)
    )
    return min(100.0, max(0.0, error))


class Evaluator:
    """Interface contract: deterministic response per (genome, fraction,
    objectives) for the in-process implementations."""

    evaluator_id: str = "abstract"

    def evaluate(self, request: EvalRequest) -> EvalResponse:
        raise NotImplementedError

    def evaluate_many(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]:
        return [self.evaluate(r) for r in requests]

    def close(self) -> None:
        pass

    def __enter__(self) -> "Evaluator":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


class SyntheticEvaluator(Evaluator):
    """In-process deterministic surrogate; never supplies latency."""

    evaluator_id = "synthetic"

    def __init__(self, constants: SurrogateConstants | None = None) -> None:
        self.constants = constants if constants is not None else SurrogateConstants()

    def evaluate(self, request: EvalRequest) -> EvalResponse:
        error = surrogate_error(request.genome, self.constants)
        return EvalResponse(error, None, self.evaluator_id, wall_time_ms=0)


class TableEvaluator(Evaluator):
    """Lookup of recorded measurements keyed by (genome, subset_fraction).

    CSV format: header ``genome,subset_fraction,miou_error_pct`` with an
    optional trailing ``latency_cycles`` column.
    """

    evaluator_id = "table"

    def __init__(self, path: str) -> None:
        import csv

        self.path = path
        self._rows: dict[tuple[str, float], tuple[float, float | None]] = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"genome", "subset_fraction", "miou_error_pct"}
            if reader.fieldnames is None or not required <= set(reader.fieldnames):
                raise ConfigError(f"{path}: expected columns {sorted(required)}")
            for row in reader:
                genome = parse_genome(row["genome"]).text
                fraction = round(float(row["subset_fraction"]), 6)
                error = float(row["miou_error_pct"])
                if not 0.0 <= error <= 100.0:
                    raise ConfigError(f"{path}: error {error} outside [0, 100] for {genome}")
                latency = row.get("latency_cycles")
                cycles = float(latency) if latency not in (None, "") else None
                self._rows[(genome, fraction)] = (error, cycles)

    def evaluate(self, request: EvalRequest) -> EvalResponse:
        key = (parse_genome(request.genome).text, round(request.subset_fraction, 6))
        if key not in self._rows:
            raise MissingEntryError(
                f"no table entry for genome {key[0]} at fraction {key[1]}"
            )
        error, cycles = self._rows[key]
        return EvalResponse(error, cycles, self.evaluator_id, wall_time_ms=0)


class _Worker:
    """One subprocess speaking the wire protocol, with a reader thread."""

    def __init__(self, argv: list[str], space: Space, timeout_s: float,
                 handshake_config: dict[str, Any] | None) -> None:
        try:
            self.proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot launch worker {argv!r}: {exc}") from exc
        self.frames: Queue[dict[str, Any] | None] = Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        hello: dict[str, Any] = {
            "type": "hello",
            "protocol": PROTOCOL_VERSION,
            "space": space.value,
        }
        if handshake_config:
            hello["config"] = handshake_config
        self._send(hello)
        ready = self._next_frame(timeout_s)
        if ready.get("type") != "ready":
            self.stop()
            raise TransportError(f"worker handshake failed: {ready}")
        self.capacity = max(1, int(ready.get("capacity", 1)))
        self.evaluator_id = str(ready.get("evaluator_id", "external"))

    def _read_loop(self) -> None:
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                self.frames.put(parse_frame(line))
            except ValueError:
                self.frames.put({"type": "error", "id": None,
                                 "message": f"unparseable frame: {line[:200]}"})
        self.frames.put(None)

    def _send(self, frame: dict[str, Any]) -> None:
        if self.proc.stdin is None or self.proc.poll() is not None:
            raise TransportError("worker process is gone")
        try:
            write_frame(self.proc.stdin, frame)
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"failed to write to worker: {exc}") from exc

    def _next_frame(self, timeout_s: float) -> dict[str, Any]:
        try:
            frame = self.frames.get(timeout=timeout_s)
        except Empty:
            raise TransportError(f"worker response timed out after {timeout_s}s") from None
        if frame is None:
            raise TransportError("worker closed its output stream")
        return frame

    def stop(self) -> None:
        if self.proc.poll() is None:
            self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()
        if self.proc.stdin is not None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass


class ExternalEvaluator(Evaluator):
    """Client for a subprocess worker; multiplexes requests by id.

    Crashes and timeouts raise :class:`TransportError` after exhausting the
    retry budget; unanswered requests are replayed against a fresh worker.
    """

    def __init__(self, command: str | Sequence[str], space: Space,
                 timeout_s: float = 600.0, retries: int = 1,
                 handshake_config: dict[str, Any] | None = None) -> None:
        if isinstance(command, str):
            self.argv = shlex.split(command)
        else:
            self.argv = list(command)
        if not self.argv:
            raise ConfigError("external evaluator command is empty")
        self.space = space
        self.timeout_s = timeout_s
        self.retries = retries
        self.handshake_config = handshake_config
        self._worker: _Worker | None = None
        self._next_id = 0
        self.evaluator_id = "external"

    def _ensure_worker(self) -> _Worker:
        if self._worker is None or self._worker.proc.poll() is not None:
            self._worker = _Worker(self.argv, self.space, self.timeout_s,
                                   self.handshake_config)
            self.evaluator_id = self._worker.evaluator_id
        return self._worker

    def evaluate(self, request: EvalRequest) -> EvalResponse:
        return self.evaluate_many([request])[0]

    def evaluate_many(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]:
        attempts = self.retries + 1
        last_error: TransportError | None = None
        for _ in range(attempts):
            try:
                return self._run_batch(requests)
            except TransportError as exc:
                last_error = exc
                self.close()
        assert last_error is not None
        raise last_error

    def _run_batch(self, requests: Sequence[EvalRequest]) -> list[EvalResponse]:
        worker = self._ensure_worker()
        pending: dict[int, int] = {}  # frame id -> request index
        responses: dict[int, EvalResponse] = {}
        queue = list(enumerate(requests))
        sent = 0
        while len(responses) < len(requests):
            while queue and sent - len(responses) < worker.capacity:
                index, req = queue.pop(0)
                self._next_id += 1
                pending[self._next_id] = index
                worker._send({
                    "type": "eval",
                    "id": self._next_id,
                    "genome": req.genome,
                    "subset_fraction": req.subset_fraction,
                    "objectives": list(req.objectives),
                })
                sent += 1
            frame = worker._next_frame(self.timeout_s)
            kind = frame.get("type")
            if kind == "result":
                index = pending.pop(frame.get("id"), None)
                if index is None:
                    raise TransportError(f"result for unknown request id {frame.get('id')}")
                responses[index] = EvalResponse(
                    miou_error_pct=float(frame["miou_error_pct"]),
                    latency_cycles=(float(frame["latency_cycles"])
                                    if frame.get("latency_cycles") is not None else None),
                    evaluator_id=worker.evaluator_id,
                    wall_time_ms=int(frame.get("wall_time_ms", 0)),
                )
            elif kind == "error":
                index = pending.pop(frame.get("id"), None)
                message = frame.get("message", "unknown worker error")
                if index is None:
                    raise TransportError(f"worker error: {message}")
                raise EvaluationError(f"worker rejected {requests[index].genome}: {message}")
            else:
                raise TransportError(f"unexpected frame type {kind!r}")
        return [responses[i] for i in range(len(requests))]

    def close(self) -> None:
        if self._worker is not None:
            self._worker.stop()
            self._worker = None


def build_evaluator(kind: str, *, path: str | None = None,
                    command: str | Sequence[str] | None = None,
                    space: Space | None = None,
                    constants: SurrogateConstants | None = None,
                    timeout_s: float = 600.0, retries: int = 1) -> Evaluator:
    """Construct an evaluator from a config-style description."""
    if kind == "synthetic":
        return SyntheticEvaluator(constants)
    if kind == "table":
        if not path:
            raise ConfigError("table evaluator needs a csv path")
        return TableEvaluator(path)
    if kind == "external":
        if not command or space is None:
            raise ConfigError("external evaluator needs a command and a space")
        handshake = constants.to_dict() if constants is not None else None
        return ExternalEvaluator(command, space, timeout_s=timeout_s,
                                 retries=retries, handshake_config=handshake)
    raise ConfigError(f"unknown evaluator kind {kind!r}")
