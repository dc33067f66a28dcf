"""Front extraction, hypervolume, and gene-frequency tests."""

from __future__ import annotations

import numpy as np
import pytest

from paretonas import (
    EvaluationError,
    Individual,
    ParetoFront,
    Space,
    extract_front,
    gene_frequency,
    hyperarea_difference,
    hypervolume_2d,
    parse_genome,
)
from paretonas.nsga2 import random_genome
from paretonas.pareto import filter_dominating

from conftest import mc_hypervolume, oracle_fronts


def _inds(points, space=Space.XCEPTION):
    rng = np.random.default_rng(0)
    out = []
    for p in points:
        out.append(Individual(random_genome(space, rng), objectives=tuple(p)))
    return out


class TestExtractFront:
    def test_dominated_point_removed(self):
        front = extract_front(_inds([(1, 2), (2, 1), (2, 2)]))
        assert front.objectives == [(1, 2), (2, 1)]

    def test_singleton(self):
        front = extract_front(_inds([(3.0, 4.0)]))
        assert len(front) == 1

    def test_duplicates_collapsed(self):
        front = extract_front(_inds([(1, 2), (1, 2), (2, 1)]))
        assert front.objectives == [(1, 2), (2, 1)]

    def test_sorted_by_first_objective(self, rng: np.random.Generator):
        front = extract_front(_inds(rng.random((50, 2))))
        firsts = [p[0] for p in front.objectives]
        assert firsts == sorted(firsts)

    def test_agrees_with_oracle_rank0(self, rng: np.random.Generator):
        for _ in range(50):
            pts = rng.random((int(rng.integers(1, 120)), 2))
            front = extract_front(_inds(pts))
            expected = sorted({tuple(pts[i]) for i in oracle_fronts(pts)[0]})
            assert front.objectives == expected

    def test_unevaluated_individual_rejected(self, rng: np.random.Generator):
        with pytest.raises(EvaluationError):
            extract_front([Individual(random_genome(Space.XCEPTION, rng))])


class TestHypervolume:
    def test_unit_box(self):
        assert hypervolume_2d([(0.0, 0.0)], (1.0, 1.0)) == pytest.approx(1.0)

    def test_hand_case(self):
        hv = hypervolume_2d([(0.2, 0.4), (0.5, 0.1)], (1.0, 1.0))
        assert hv == pytest.approx(0.63, abs=1e-12)

    def test_dominated_point_changes_nothing(self):
        base = hypervolume_2d([(0.2, 0.4), (0.5, 0.1)], (1.0, 1.0))
        padded = hypervolume_2d([(0.2, 0.4), (0.5, 0.1), (0.6, 0.5)], (1.0, 1.0))
        assert padded == base

    def test_empty_front_is_zero(self):
        assert hypervolume_2d([], (1.0, 1.0)) == 0.0

    def test_point_not_dominating_ref_rejected(self):
        with pytest.raises(EvaluationError):
            hypervolume_2d([(1.5, 0.5)], (1.0, 1.0))

    def test_three_objectives_rejected(self):
        with pytest.raises(EvaluationError):
            hypervolume_2d([(0.1, 0.1, 0.1)], (1.0, 1.0, 1.0))

    def test_matches_monte_carlo(self, rng: np.random.Generator):
        for _ in range(10):
            pts = rng.random((12, 2))
            front = [tuple(pts[i]) for i in oracle_fronts(pts)[0]]
            exact = hypervolume_2d(front, (1.1, 1.1))
            estimate = mc_hypervolume(front, (1.1, 1.1), 200_000, rng)
            assert exact == pytest.approx(estimate, rel=0.02)

    def test_improved_front_never_shrinks(self, rng: np.random.Generator):
        pts = rng.random((20, 2)) * 0.5 + 0.2
        front = [tuple(p) for p in pts[oracle_fronts(pts)[0]]]
        better = [(x * 0.9, y * 0.9) for x, y in front]
        ref = (1.0, 1.0)
        assert hypervolume_2d(better, ref) >= hypervolume_2d(front, ref)


class TestHyperareaDifference:
    def test_identical_fronts(self):
        f = [(0.2, 0.4), (0.5, 0.1)]
        assert hyperarea_difference(f, f, (1.0, 1.0)) == 0.0

    def test_added_dominating_point_is_positive(self):
        prev = [(0.2, 0.4), (0.5, 0.1)]
        curr = prev + [(0.1, 0.05)]
        assert hyperarea_difference(prev, curr, (1.0, 1.0)) > 0.0

    def test_filter_dominating(self):
        pts = [(0.5, 0.5), (1.2, 0.1), (0.1, 1.0)]
        assert filter_dominating(pts, (1.0, 1.0)) == [(0.5, 0.5)]


class TestGeneFrequency:
    def test_single_genome_front(self, rng: np.random.Generator):
        g = random_genome(Space.XCEPTION, rng)
        front = ParetoFront((((1.0, 2.0), g.text),), 1, ("error", "flops"))
        assert gene_frequency(front) == [float(b) for b in g.bits]

    def test_complementary_masks_average_to_half(self):
        a = parse_genome("xception:" + "0" * 22)
        b = parse_genome("xception:" + "1" * 22)
        front = ParetoFront((((1.0, 2.0), a.text), ((2.0, 1.0), b.text)), 1, ())
        assert gene_frequency(front) == [0.5] * 22

    def test_mixed_spaces_rejected(self):
        a = parse_genome("xception:" + "0" * 22)
        b = parse_genome("mobilenetv2:" + "0" * 23)
        front = ParetoFront((((1.0, 2.0), a.text), ((2.0, 1.0), b.text)), 1, ())
        with pytest.raises(EvaluationError):
            gene_frequency(front)

    def test_empty_front_rejected(self):
        with pytest.raises(EvaluationError):
            gene_frequency(ParetoFront((), 1, ()))

    def test_published_front_rows_agree_on_one_absent_block(self, tmp_path):
        # Rebuild the published error/FLOPs front rows through the table
        # evaluator and check the block reported as never selected: both rows
        # have middle block 11 (bit 16) off, while block 2 and block 10 stay on.
        from paretonas import (
            EvalRequest,
            Individual,
            TableEvaluator,
            build_layer_graph,
            count_flops,
            decode_xception,
        )
        from conftest import XCEPTION_ROWS

        rows = [XCEPTION_ROWS["f1"], XCEPTION_ROWS["f2"]]
        csv_path = tmp_path / "front.csv"
        csv_path.write_text("genome,subset_fraction,miou_error_pct\n" + "".join(
            f"{text},0.2,{err}\n" for text, err in rows))
        evaluator = TableEvaluator(str(csv_path))
        individuals = []
        for text, _ in rows:
            error = evaluator.evaluate(EvalRequest(text, 0.2)).miou_error_pct
            flops = count_flops(build_layer_graph(decode_xception(parse_genome(text)), 513))
            individuals.append(Individual(parse_genome(text), (error, float(flops))))
        front = extract_front(individuals, 20, ("error", "flops"))
        assert len(front) == 2  # the rows trade off against each other
        freqs = gene_frequency(front)
        assert freqs[16] == 0.0  # middle_block_11
        assert freqs[7] == 1.0 and freqs[15] == 1.0  # blocks 2 and 10
