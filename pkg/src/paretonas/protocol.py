"""Line-delimited JSON wire protocol spoken with external evaluator workers.

One frame per line, UTF-8.  Frame types:

* ``{"type": "hello", "protocol": 1, "space": "xception"}`` (engine -> worker;
  may carry a ``"config"`` object with surrogate-constant overrides)
* ``{"type": "ready", "capacity": N, "evaluator_id": str}`` (worker -> engine)
* ``{"type": "eval", "id": u64, "genome": "xception:10...",
  "subset_fraction": 0.2, "objectives": ["error"]}``
* ``{"type": "result", "id": u64, "miou_error_pct": f,
  "latency_cycles": optional, "wall_time_ms": u}``
* ``{"type": "error", "id": u64, "message": str}``
"""

from __future__ import annotations

import json
from typing import IO, Any

PROTOCOL_VERSION = 1

__all__ = ["PROTOCOL_VERSION", "dump_frame", "parse_frame", "write_frame"]


def dump_frame(frame: dict[str, Any]) -> str:
    return json.dumps(frame, separators=(",", ":"))


def parse_frame(line: str) -> dict[str, Any]:
    frame = json.loads(line)
    if not isinstance(frame, dict) or "type" not in frame:
        raise ValueError("frame must be a JSON object with a 'type' field")
    return frame


def write_frame(stream: IO[str], frame: dict[str, Any]) -> None:
    stream.write(dump_frame(frame) + "\n")
    stream.flush()
