"""Request loop: handshake, then answer eval frames until EOF.

Frames are one JSON object per line.  The first frame must be a ``hello``
carrying the protocol version and search space and may carry a ``config``
object of surrogate-constant overrides; the worker answers ``ready`` and then
serves ``eval`` frames one at a time (capacity 1).  Malformed frames and
unknown spaces produce ``error`` frames that echo the offending request id
(or id 0 when no id could be parsed); they never kill the worker.
"""

from __future__ import annotations

import json
import sys
import time
from typing import IO, Any

from .surrogate import SurrogateConstants, measure_error

PROTOCOL_VERSION = 1
EVALUATOR_ID = "surrogate-worker/0.1"
CAPACITY = 1


def _send(out: IO[str], frame: dict[str, Any]) -> None:
    out.write(json.dumps(frame, separators=(",", ":")) + "\n")
    out.flush()


def _error(out: IO[str], request_id: Any, message: str) -> None:
    _send(out, {"type": "error", "id": request_id if request_id is not None else 0,
                "message": message})


def _handshake(inp: IO[str], out: IO[str]) -> tuple[str, SurrogateConstants] | None:
    line = inp.readline()
    if not line:
        return None
    try:
        frame = json.loads(line)
    except json.JSONDecodeError:
        _error(out, None, "handshake frame is not valid JSON")
        return None
    if not isinstance(frame, dict) or frame.get("type") != "hello":
        _error(out, None, "expected a hello frame")
        return None
    if frame.get("protocol") != PROTOCOL_VERSION:
        _error(out, None,
               f"unsupported protocol {frame.get('protocol')!r}; this worker speaks "
               f"{PROTOCOL_VERSION}")
        return None
    space = frame.get("space", "xception")
    constants = SurrogateConstants()
    overrides = frame.get("config")
    if isinstance(overrides, dict):
        try:
            constants = SurrogateConstants.from_dict(overrides)
        except (TypeError, ValueError) as exc:
            _error(out, None, f"bad surrogate config: {exc}")
            return None
    _send(out, {"type": "ready", "capacity": CAPACITY, "evaluator_id": EVALUATOR_ID})
    return space, constants


def serve(inp: IO[str], out: IO[str]) -> int:
    """Serve one engine connection; returns a process exit code."""
    session = _handshake(inp, out)
    if session is None:
        return 1
    _space, constants = session
    for line in inp:
        line = line.strip()
        if not line:
            continue
        request_id: Any = None
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            _error(out, None, "frame is not valid JSON")
            continue
        if not isinstance(frame, dict):
            _error(out, None, "frame must be a JSON object")
            continue
        request_id = frame.get("id")
        if frame.get("type") != "eval":
            _error(out, request_id, f"unsupported frame type {frame.get('type')!r}")
            continue
        genome = frame.get("genome")
        if not isinstance(genome, str):
            _error(out, request_id, "eval frame lacks a genome string")
            continue
        started = time.monotonic()
        try:
            error_pct = measure_error(
                genome,
                float(frame.get("subset_fraction", 0.2)),
                constants,
            )
        except (TypeError, ValueError) as exc:
            _error(out, request_id, str(exc))
            continue
        _send(out, {
            "type": "result",
            "id": request_id,
            "miou_error_pct": error_pct,
            "wall_time_ms": int((time.monotonic() - started) * 1000),
        })
    return 0


def main() -> int:
    return serve(sys.stdin, sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
