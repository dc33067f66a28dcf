"""Worker tests: handshake, request loop, error frames, surrogate values."""

from __future__ import annotations

import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from surrogate_worker.surrogate import SurrogateConstants, hash_noise, measure_error
from surrogate_worker.worker import serve

SUPERNET_XCEPTION = "xception:0100001111111111111111"
SUPERNET_MOBILENETV2 = "mobilenetv2:00001111111111111111111"


def run_session(frames: list[dict]) -> tuple[int, list[dict]]:
    stdin = io.StringIO("".join(json.dumps(f) + "\n" for f in frames))
    stdout = io.StringIO()
    code = serve(stdin, stdout)
    replies = [json.loads(line) for line in stdout.getvalue().splitlines()]
    return code, replies


def hello(**extra) -> dict:
    return {"type": "hello", "protocol": 1, "space": "xception", **extra}


def eval_frame(request_id: int, genome: str, fraction: float = 0.2) -> dict:
    return {"type": "eval", "id": request_id, "genome": genome,
            "subset_fraction": fraction, "objectives": ["error"]}


class TestHandshake:
    def test_ready_after_hello(self):
        code, replies = run_session([hello()])
        assert code == 0
        assert replies == [{"type": "ready", "capacity": 1,
                            "evaluator_id": "surrogate-worker/0.1"}]

    def test_protocol_mismatch_rejected(self):
        code, replies = run_session([hello(protocol=99)])
        assert code == 1
        assert replies[0]["type"] == "error"
        assert "protocol" in replies[0]["message"]

    def test_non_hello_first_frame_rejected(self):
        code, replies = run_session([eval_frame(1, SUPERNET_XCEPTION)])
        assert code == 1
        assert replies[0]["type"] == "error"

    def test_empty_input_exits_quietly(self):
        code, replies = run_session([])
        assert code == 1
        assert replies == []


class TestEval:
    def test_supernet_scores_base_error_without_noise(self):
        config = {"delta": 0.0}
        code, replies = run_session([hello(config=config),
                                     eval_frame(7, SUPERNET_XCEPTION)])
        assert code == 0
        result = replies[1]
        assert result["type"] == "result"
        assert result["id"] == 7
        assert result["miou_error_pct"] == 23.14

    def test_mobilenetv2_supernet_base(self):
        code, replies = run_session([hello(config={"delta": 0.0}),
                                     eval_frame(1, SUPERNET_MOBILENETV2)])
        assert replies[1]["miou_error_pct"] == 33.03

    def test_every_request_id_answered_exactly_once(self):
        frames = [hello()] + [eval_frame(i, SUPERNET_XCEPTION) for i in range(1, 21)]
        code, replies = run_session(frames)
        ids = [r["id"] for r in replies[1:]]
        assert sorted(ids) == list(range(1, 21))
        assert all(r["type"] == "result" for r in replies[1:])

    def test_responses_are_deterministic(self):
        frames = [hello(), eval_frame(1, SUPERNET_XCEPTION), eval_frame(2, SUPERNET_XCEPTION)]
        _, replies = run_session(frames)
        assert replies[1]["miou_error_pct"] == replies[2]["miou_error_pct"]

    def test_constants_override_applies(self):
        frames = [hello(config={"base_error_xception": 50.0, "delta": 0.0}),
                  eval_frame(1, SUPERNET_XCEPTION)]
        _, replies = run_session(frames)
        assert replies[1]["miou_error_pct"] == 50.0


class TestErrorFrames:
    def test_malformed_json_gets_error_frame_and_keeps_serving(self):
        stdin = io.StringIO(json.dumps(hello()) + "\n"
                            + "this is not json\n"
                            + json.dumps(eval_frame(3, SUPERNET_XCEPTION)) + "\n")
        stdout = io.StringIO()
        assert serve(stdin, stdout) == 0
        replies = [json.loads(line) for line in stdout.getvalue().splitlines()]
        assert replies[1] == {"type": "error", "id": 0,
                              "message": "frame is not valid JSON"}
        assert replies[2]["type"] == "result" and replies[2]["id"] == 3

    def test_unknown_space_echoes_request_id(self):
        _, replies = run_session([hello(), eval_frame(9, "resnet:0101")])
        assert replies[1]["type"] == "error"
        assert replies[1]["id"] == 9

    def test_wrong_length_genome_rejected(self):
        _, replies = run_session([hello(), eval_frame(4, "xception:0101")])
        assert replies[1]["type"] == "error" and replies[1]["id"] == 4

    def test_bad_fraction_rejected(self):
        _, replies = run_session([hello(), eval_frame(5, SUPERNET_XCEPTION, fraction=0.0)])
        assert replies[1]["type"] == "error" and replies[1]["id"] == 5

    def test_unknown_frame_type_rejected(self):
        _, replies = run_session([hello(), {"type": "shutouts", "id": 6}])
        assert replies[1]["type"] == "error" and replies[1]["id"] == 6


class TestSurrogate:
    def test_noise_is_stable_and_bounded(self):
        values = {hash_noise(f"xception:{i:022b}") for i in range(200)}
        assert all(-1.0 <= v < 1.0 for v in values)
        assert hash_noise("xception:" + "0" * 22) == hash_noise("xception:" + "0" * 22)

    def test_removed_blocks_raise_error_linearly(self):
        constants = SurrogateConstants(delta=0.0)
        full = measure_error("xception:010000" + "1" * 16, 0.2, constants)
        two_off = measure_error("xception:010000" + "00" + "1" * 14, 0.2, constants)
        assert two_off - full == pytest.approx(2 * constants.alpha)

    def test_clamped_to_range(self):
        constants = SurrogateConstants(alpha=100.0)
        v = measure_error("xception:010000" + "0" * 16, 0.2, constants)
        assert v == 100.0


class TestSubprocess:
    def test_roundtrip_through_real_pipes(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "surrogate_worker"],
            stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True,
            env={"PYTHONPATH": str(Path(__file__).resolve().parents[1] / "src")},
        )
        frames = [hello(config={"delta": 0.0}), eval_frame(1, SUPERNET_XCEPTION)]
        out, _ = proc.communicate("".join(json.dumps(f) + "\n" for f in frames),
                                  timeout=30)
        replies = [json.loads(line) for line in out.splitlines()]
        assert replies[0]["type"] == "ready"
        assert replies[1]["miou_error_pct"] == 23.14
        assert proc.returncode == 0
