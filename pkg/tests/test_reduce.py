"""Tests for dropping null outcomes and merging equivalent ones."""

from __future__ import annotations

import numpy as np
import pytest

from povm_ascent.ensembles import orthogonal_pair, random_ensemble
from povm_ascent.errors import EmptyPovm
from povm_ascent.info import mutual_information
from povm_ascent.linalg import make_rng
from povm_ascent.model import Povm, probability_table
from povm_ascent.optimizer import OptimizerConfig, init_random_povm, run
from povm_ascent.reduce import drop_null_outcomes, merge_equivalent_outcomes, reduce_povm

P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])


class TestDropNullOutcomes:
    def test_identity_and_zero(self):
        p = Povm.from_elements([np.eye(2), np.zeros((2, 2))])
        kept = drop_null_outcomes(p)
        assert kept.num_outcomes == 1
        np.testing.assert_allclose(kept.elements[0], np.eye(2), atol=1e-12)

    def test_renormalizes(self):
        p = Povm.from_elements([P0, P1 * (1 - 1e-11), P1 * 1e-11])
        kept = drop_null_outcomes(p)
        assert kept.num_outcomes == 2
        assert kept.completeness_residual() <= 1e-9

    def test_nothing_to_drop_returns_input(self):
        p = Povm.from_elements([P0, P1])
        assert drop_null_outcomes(p) is p

    def test_all_null(self):
        with pytest.raises(EmptyPovm):
            drop_null_outcomes(Povm(np.zeros((2, 2, 2))))


class TestMergeEquivalentOutcomes:
    def test_split_outcome_merges(self):
        e = orthogonal_pair()
        p = Povm.from_elements([P0 / 2, P0 / 2, P1])
        merged = merge_equivalent_outcomes(p, probability_table(e, p))
        assert merged.num_outcomes == 2
        np.testing.assert_allclose(merged.elements[0], P0, atol=1e-12)
        np.testing.assert_allclose(merged.elements[1], P1, atol=1e-12)

    def test_projectors_unchanged(self):
        e = orthogonal_pair()
        p = Povm.from_elements([P0, P1])
        assert merge_equivalent_outcomes(p, probability_table(e, p)) is p

    def test_merges_to_fixpoint(self):
        e = orthogonal_pair()
        p = Povm.from_elements([P0 / 4, P1 / 2, P0 / 4, P1 / 2, P0 / 2])
        merged = merge_equivalent_outcomes(p, probability_table(e, p))
        assert merged.num_outcomes == 2
        np.testing.assert_allclose(merged.elements[0], P0, atol=1e-12)
        assert merged.completeness_residual() <= 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_information_preserved(self, seed):
        rng = make_rng(seed)
        e = random_ensemble(3, 3, rng)
        base = init_random_povm(3, 3, rng)
        pis = list(base.elements)
        split = Povm.from_elements([pis[0] * 0.3, pis[1], pis[0] * 0.7, pis[2]])
        before = mutual_information(probability_table(e, split))
        merged = merge_equivalent_outcomes(split, probability_table(e, split), 1e-9)
        assert merged.num_outcomes == 3
        after = mutual_information(probability_table(e, merged))
        assert abs(after - before) <= 1e-8
        assert merged.completeness_residual() <= 1e-9


class TestReducePovm:
    def test_idempotent(self):
        e = orthogonal_pair()
        p = Povm.from_elements([P0 / 2, P0 / 2, P1, np.zeros((2, 2))])
        once = reduce_povm(p, e)
        twice = reduce_povm(once, e)
        assert once.num_outcomes == twice.num_outcomes == 2
        np.testing.assert_allclose(once.elements, twice.elements, atol=1e-12)

    def test_never_grows(self):
        rng = make_rng(9)
        e = random_ensemble(2, 3, rng)
        p = init_random_povm(2, 5, rng)
        reduced = reduce_povm(p, e)
        assert reduced.num_outcomes <= p.num_outcomes
        assert reduced.min_eigenvalue() >= -1e-10

    def test_orthogonal_pair_from_six_outcomes(self):
        e = orthogonal_pair()
        report = run(e, OptimizerConfig(seed=3, tolerance=1e-12, max_iterations=5000), k_init=6)
        kept = drop_null_outcomes(report.final_povm)
        assert mutual_information(probability_table(e, kept)) == pytest.approx(1.0, abs=1e-6)
        reduced = reduce_povm(report.final_povm, e)
        assert 2 <= reduced.num_outcomes <= 6
        assert reduced.completeness_residual() <= 1e-9
        mi = mutual_information(probability_table(e, reduced))
        assert mi == pytest.approx(1.0, abs=1e-6)
