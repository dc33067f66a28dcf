"""Acceptance suite: one test per release criterion, timed where required.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  Criteria 1-10 exercise the library alone; criterion 11 needs
the reference worker package under ``adapter/`` and is skipped without it.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest

from paretonas import (
    EvalRequest,
    EvaluatorSpec,
    EvolutionEngine,
    MobileNetV2Arch,
    RunWriter,
    SearchConfig,
    Space,
    SurrogateConstants,
    SyntheticEvaluator,
    XceptionArch,
    build_layer_graph,
    count_flops,
    count_params,
    crowding_distance,
    decode,
    decode_mobilenetv2,
    decode_xception,
    encode_mobilenetv2,
    encode_xception,
    fast_nondominated_sort,
    genome_from_int,
    hypervolume_2d,
    load_checkpoint,
    parse_genome,
    space_cardinality,
)
from paretonas.cli import main as cli_main
from paretonas.evaluators import ExternalEvaluator

from conftest import XCEPTION_ROWS, mc_hypervolume, oracle_fronts


@contextmanager
def criterion(number: int, summary: str, budget_s: float | None = None):
    started = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number:02d} FAIL  {summary}")
        raise
    elapsed = time.monotonic() - started
    if budget_s is not None:
        assert elapsed < budget_s, f"criterion {number} took {elapsed:.1f}s (> {budget_s}s)"
    print(f"ACCEPTANCE {number:02d} PASS  {summary}  [{elapsed:.1f}s]")


BASE_CONFIG = dict(space=Space.XCEPTION, objectives=("error", "flops"),
                   population=12, generations=20, seed=7)


def test_c01_space_cardinality():
    with criterion(1, "space cardinalities are exact", budget_s=1.0):
        assert space_cardinality(Space.XCEPTION) == 4_194_304
        assert space_cardinality(Space.MOBILENETV2) == 8_388_608


def test_c02_codec_totality_and_round_trip():
    with criterion(2, "codec total + round-trip (2^22 exhaustive, 10^6 random)",
                   budget_s=120.0):
        for value in range(space_cardinality(Space.XCEPTION)):
            g = genome_from_int(Space.XCEPTION, value)
            assert encode_xception(decode_xception(g)).bits == g.bits
        rng = np.random.default_rng(2)
        cardinality = space_cardinality(Space.MOBILENETV2)
        for value in rng.integers(cardinality, size=1_000_000):
            g = genome_from_int(Space.MOBILENETV2, int(value))
            assert encode_mobilenetv2(decode_mobilenetv2(g)).bits == g.bits


def _xc(stride=2, atrous=1, exit_rates=(1, 2), aspp=(6, 12, 18), mask=(1,) * 16):
    return XceptionArch(stride, atrous, exit_rates, aspp, tuple(mask))


def test_c03_middle_block_parameter_delta():
    with criterion(3, "toggling one middle block moves params by 1,618,344"):
        full = count_params(build_layer_graph(_xc(), 513))
        for k in (0, 7, 15):
            mask = tuple(0 if i == k else 1 for i in range(16))
            reduced = count_params(build_layer_graph(_xc(mask=mask), 513))
            assert full - reduced == 1_618_344
        implied = (41.26e6 - 38.00e6) / 2
        assert abs(1_618_344 / implied - 1) < 0.05


def test_c04_parameter_invariance():
    with criterion(4, "strides and atrous/dilation rates never change params"):
        f1 = decode_xception(parse_genome(XCEPTION_ROWS["f1"][0]))
        p2 = decode_xception(parse_genome(XCEPTION_ROWS["p2"][0]))
        assert f1.middle_blocks == p2.middle_blocks
        assert (f1.entry_stride, p2.entry_stride) == (3, 2)
        assert count_params(build_layer_graph(f1, 513)) == \
            count_params(build_layer_graph(p2, 513))

        reference = count_params(build_layer_graph(_xc(), 513))
        for stride in (1, 2, 3, 4):
            for atrous in (1, 2, 3, 4):
                for exit_rates in ((1, 2), (2, 4)):
                    for aspp in ((6, 12, 18), (12, 24, 36)):
                        arch = _xc(stride, atrous, exit_rates, aspp)
                        assert count_params(build_layer_graph(arch, 513)) == reference

        base = decode_mobilenetv2(parse_genome("mobilenetv2:" + "0" * 4 + "1" * 19))
        reference = count_params(build_layer_graph(base, 384))
        rng = np.random.default_rng(4)
        for _ in range(60):
            dil = (int(rng.integers(1, 3)),) * 3 + tuple(
                int(rng.integers(1, 5)) for _ in range(3))
            strides = (int(rng.integers(2, 4)), int(rng.integers(2, 4)),
                       int(rng.integers(1, 3)), int(rng.integers(1, 3)))
            arch = MobileNetV2Arch(strides, dil, base.group_layers)
            assert count_params(build_layer_graph(arch, 384)) == reference


def test_c05_baseline_calibration():
    with criterion(5, "supernet params within 10% of 41.26M, FLOPs within 15% of 101.47G"):
        graph = build_layer_graph(_xc(), 513)
        assert abs(count_params(graph) / 41.26e6 - 1) < 0.10
        assert abs(count_flops(graph) / 101.47e9 - 1) < 0.15


def _random_mask_pair(rng, length):
    b = rng.integers(0, 2, size=length)
    a = b & rng.integers(0, 2, size=length)
    return tuple(int(x) for x in a), tuple(int(x) for x in b)


def test_c06_monotonicity_suite():
    with criterion(6, "10^4 mask pairs monotone, 10^3 stride pairs strictly anti-monotone",
                   budget_s=60.0):
        rng = np.random.default_rng(6)
        for _ in range(5000):
            a_mask, b_mask = _random_mask_pair(rng, 16)
            stride = int(rng.integers(1, 5))
            ga = build_layer_graph(_xc(stride=stride, mask=a_mask), 513)
            gb = build_layer_graph(_xc(stride=stride, mask=b_mask), 513)
            fa, fb = count_flops(ga), count_flops(gb)
            pa, pb = count_params(ga), count_params(gb)
            assert fa <= fb and pa <= pb
            if a_mask != b_mask:
                assert fa < fb and pa < pb
        base = decode_mobilenetv2(parse_genome("mobilenetv2:" + "0" * 4 + "1" * 19))
        for _ in range(5000):
            a_bits, b_bits = _random_mask_pair(rng, 10)
            ia, ib = iter(a_bits), iter(b_bits)
            groups_a = tuple((v[0],) + tuple(next(ia) for _ in v[1:])
                             for v in base.group_layers)
            groups_b = tuple((v[0],) + tuple(next(ib) for _ in v[1:])
                             for v in base.group_layers)
            ga = build_layer_graph(MobileNetV2Arch(base.strides, base.dilations, groups_a), 384)
            gb = build_layer_graph(MobileNetV2Arch(base.strides, base.dilations, groups_b), 384)
            fa, fb = count_flops(ga), count_flops(gb)
            pa, pb = count_params(ga), count_params(gb)
            assert fa <= fb and pa <= pb
            if groups_a != groups_b:
                assert fa < fb and pa < pb
        for _ in range(1000):
            mask = tuple(int(x) for x in rng.integers(0, 2, size=16))
            s_lo, s_hi = sorted(rng.choice(4, size=2, replace=False) + 1)
            f_lo = count_flops(build_layer_graph(_xc(stride=int(s_lo), mask=mask), 513))
            f_hi = count_flops(build_layer_graph(_xc(stride=int(s_hi), mask=mask), 513))
            assert f_hi < f_lo
            p_lo = count_params(build_layer_graph(_xc(stride=int(s_lo), mask=mask), 513))
            p_hi = count_params(build_layer_graph(_xc(stride=int(s_hi), mask=mask), 513))
            assert p_lo == p_hi


def test_c07_sort_oracle_equivalence():
    with criterion(7, "fast sort matches O(n^2) oracle on 200 instances; crowding hand case",
                   budget_s=30.0):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 501))
            objs = rng.random((n, 2))
            if rng.random() < 0.3:
                objs = np.round(objs, 1)  # provoke ties and duplicates
            assert fast_nondominated_sort([tuple(o) for o in objs]) == oracle_fronts(objs)
        dists = crowding_distance([(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)])
        assert dists[1] == pytest.approx(2.0)


def test_c08_hypervolume_oracle():
    with criterion(8, "exact hypervolume within 1% of 10^6-sample Monte Carlo"):
        hv = hypervolume_2d([(0.2, 0.4), (0.5, 0.1)], (1.0, 1.0))
        assert hv == pytest.approx(0.63, abs=1e-12)
        rng = np.random.default_rng(8)
        ref = (1.1, 1.1)
        for _ in range(50):
            cloud = rng.random((int(rng.integers(5, 40)), 2))
            front = [tuple(p) for p in cloud[oracle_fronts(cloud)[0]]]
            exact = hypervolume_2d(front, ref)
            estimate = mc_hypervolume(front, ref, 1_000_000, rng)
            assert exact == pytest.approx(estimate, rel=0.01)


def test_c09_end_to_end_determinism_and_elitism(tmp_path):
    with criterion(9, "reference-scale run: identical replay, monotone archive, 240 evals",
                   budget_s=10.0):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({
            "space": "xception", "objectives": ["error", "flops"],
            "population": 12, "generations": 20, "seed": 7,
        }))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli_main(["search", "--config", str(cfg_path), "--out", str(out_a)]) == 0
        assert cli_main(["search", "--config", str(cfg_path), "--out", str(out_b)]) == 0
        assert (out_a / "fronts.csv").read_bytes() == (out_b / "fronts.csv").read_bytes()

        with open(out_a / "metrics.csv") as fh:
            next(fh)
            rows = [line.split(",") for line in fh]
        hvs = [float(r[1]) for r in rows]
        diffs = [float(r[2]) for r in rows]
        assert len(rows) == 20
        assert all(b >= a for a, b in zip(hvs, hvs[1:]))
        assert all(d >= 0 for d in diffs)
        assert load_checkpoint(str(out_a))["unique_evaluations"] == 240


def test_c10_resume_equivalence(tmp_path):
    with criterion(10, "kill after generation 10 + resume reproduces the run byte-for-byte"):
        config = SearchConfig(**BASE_CONFIG)
        out_full, out_cut = tmp_path / "full", tmp_path / "cut"
        EvolutionEngine(config, writer=RunWriter(str(out_full), config)).run()

        class Kill(Exception):
            pass

        def hook(engine, record):
            if record.generation == 10:
                raise Kill()

        engine = EvolutionEngine(config, writer=RunWriter(str(out_cut), config))
        with pytest.raises(Kill):
            engine.run(on_generation=hook)
        assert load_checkpoint(str(out_cut))["generation"] == 10
        assert cli_main(["resume", "--out", str(out_cut)]) == 0

        assert (out_full / "fronts.csv").read_bytes() == (out_cut / "fronts.csv").read_bytes()
        assert (out_full / "metrics.csv").read_bytes() == (out_cut / "metrics.csv").read_bytes()
        for gen in range(1, 21):
            name = f"gen_{gen:04d}.jsonl"
            full_rows = [json.loads(line) for line in open(out_full / name)]
            cut_rows = [json.loads(line) for line in open(out_cut / name)]
            for row in full_rows + cut_rows:
                row.pop("timing", None)
            assert full_rows == cut_rows


def test_c11_protocol_parity(tmp_path, worker_command):
    with criterion(11, "external adapter matches the in-process surrogate exactly"):
        constants = SurrogateConstants()
        synthetic = SyntheticEvaluator(constants)
        external = ExternalEvaluator(worker_command, Space.XCEPTION, timeout_s=60,
                                     handshake_config=constants.to_dict())
        rng = np.random.default_rng(11)
        genomes = []
        for _ in range(50):
            genomes.append(genome_from_int(
                Space.XCEPTION, int(rng.integers(space_cardinality(Space.XCEPTION)))).text)
            genomes.append(genome_from_int(
                Space.MOBILENETV2, int(rng.integers(space_cardinality(Space.MOBILENETV2)))).text)
        requests = [EvalRequest(g) for g in genomes]
        local = synthetic.evaluate_many(requests)
        remote = external.evaluate_many(requests)
        external.close()
        assert all(round(a.miou_error_pct, 6) == round(b.miou_error_pct, 6)
                   for a, b in zip(local, remote))

        base = dict(space=Space.XCEPTION, objectives=("error", "flops"),
                    population=12, generations=5, seed=11)
        in_process = EvolutionEngine(SearchConfig(**base)).run()
        via_adapter = EvolutionEngine(SearchConfig(
            **base,
            evaluator=EvaluatorSpec(kind="external", command=worker_command),
            eval_timeout_s=60.0,
        )).run()
        assert in_process.trace(include_provenance=False) == \
            via_adapter.trace(include_provenance=False)
        # every genome in both caches decodes, and the searches saw the same ones
        assert set(in_process.eval_cache) == set(via_adapter.eval_cache)
        for text in via_adapter.eval_cache:
            decode(parse_genome(text))
