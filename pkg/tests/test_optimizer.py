"""Tests for the optimizer: initialization, directions, steps, line search, stopping, runs."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from povm_ascent.ensembles import orthogonal_pair, random_ensemble
from povm_ascent.errors import ConfigError, InvalidEnsemble
from povm_ascent.info import GradientSet, gradient_operators, mutual_information
from povm_ascent.linalg import dagger, make_rng, random_gaussian_matrix
from povm_ascent.model import Ensemble, Povm, probability_table
from povm_ascent.optimizer import (
    ConjugateMemory,
    DirectionSet,
    LineSearchConfig,
    OptimizerConfig,
    _line_objective,
    apply_step,
    ascent_direction,
    directional_slope,
    golden_section_max,
    init_random_povm,
    is_converged,
    outcome_derivatives,
    run,
)


def _random_direction(p: Povm, rng: np.random.Generator) -> DirectionSet:
    return DirectionSet(np.stack([random_gaussian_matrix(p.dim, rng) for _ in p.factors]))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
class TestConfig:
    def test_defaults(self):
        cfg = OptimizerConfig()
        assert cfg.steepest_prob == 0.02
        assert cfg.max_iterations == 10000
        assert cfg.restarts == 1
        assert cfg.line_search == LineSearchConfig(1.0, 1e-6, 100)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"steepest_prob": 1.5},
            {"steepest_prob": -0.1},
            {"tolerance": -1e-9},
            {"seed": -1},
            {"max_iterations": 0},
            {"restarts": 0},
        ],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(ConfigError):
            OptimizerConfig(**kwargs)

    def test_line_search_validation(self):
        with pytest.raises(ConfigError):
            LineSearchConfig(bracket_max=0.0)

    def test_dict_round_trip(self):
        cfg = OptimizerConfig(steepest_prob=0.5, seed=9, line_search=LineSearchConfig(2.0))
        assert OptimizerConfig.from_dict(cfg.to_dict()) == cfg


# ---------------------------------------------------------------------------
# init_random_povm
# ---------------------------------------------------------------------------
class TestInitRandomPovm:
    def test_single_outcome_is_unitary(self):
        p = init_random_povm(2, 1, make_rng(0))
        a = p.factors[0]
        np.testing.assert_allclose(dagger(a) @ a, np.eye(2), atol=1e-10)
        np.testing.assert_allclose(p.elements[0], np.eye(2), atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**63), dim=st.integers(1, 4), k=st.integers(1, 8))
    def test_complete(self, seed, dim, k):
        p = init_random_povm(dim, k, make_rng(seed))
        assert p.num_outcomes == k
        assert p.completeness_residual() <= 1e-9

    def test_deterministic(self):
        a = init_random_povm(3, 4, make_rng(42))
        b = init_random_povm(3, 4, make_rng(42))
        assert np.array_equal(a.factors, b.factors)

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            init_random_povm(0, 2, make_rng(0))


# ---------------------------------------------------------------------------
# ascent_direction
# ---------------------------------------------------------------------------
class TestAscentDirection:
    def test_zero_gradient_gives_zero_direction(self):
        p = init_random_povm(2, 3, make_rng(1))
        g = GradientSet(np.zeros((3, 2, 2), dtype=complex))
        d, _ = ascent_direction(p, g, None, False)
        assert d.max_norm() == 0.0

    def test_first_iteration_uses_gradient(self):
        p = init_random_povm(2, 2, make_rng(2))
        g = GradientSet(np.stack([np.diag([1.0, -1.0]), np.diag([0.5, 2.0])]).astype(complex))
        d, memory = ascent_direction(p, g, None, False)
        np.testing.assert_allclose(d.directions, p.factors @ g.rks)
        assert d.steepest
        np.testing.assert_allclose(memory.gradient, d.directions)

    def test_polak_ribiere_clamped_to_zero(self):
        p = Povm(np.ones((1, 1, 1)))
        g = GradientSet(np.ones((1, 1, 1), dtype=complex))
        memory = ConjugateMemory(
            gradient=np.full((1, 1, 1), 2.0), direction=np.full((1, 1, 1), 5.0)
        )
        d, _ = ascent_direction(p, g, memory, False)
        assert d.beta == 0.0
        np.testing.assert_allclose(d.directions, [[[1.0]]])

    def test_polak_ribiere_positive_beta(self):
        p = Povm(np.ones((1, 1, 1)))
        g = GradientSet(np.full((1, 1, 1), 2.0, dtype=complex))
        memory = ConjugateMemory(gradient=np.ones((1, 1, 1)), direction=np.full((1, 1, 1), 3.0))
        d, new_memory = ascent_direction(p, g, memory, False)
        # beta = (2 - 1) * 2 / 1
        assert d.beta == pytest.approx(2.0)
        assert not d.steepest
        np.testing.assert_allclose(d.directions, [[[8.0]]])
        np.testing.assert_allclose(new_memory.direction, [[[8.0]]])

    def test_steepest_ignores_memory(self):
        p = Povm(np.ones((1, 1, 1)))
        g = GradientSet(np.full((1, 1, 1), 2.0, dtype=complex))
        memory = ConjugateMemory(gradient=np.ones((1, 1, 1)), direction=np.full((1, 1, 1), 3.0))
        d, new_memory = ascent_direction(p, g, memory, True)
        np.testing.assert_allclose(d.directions, [[[2.0]]])
        np.testing.assert_allclose(new_memory.direction, [[[2.0]]])


# ---------------------------------------------------------------------------
# apply_step and derivatives
# ---------------------------------------------------------------------------
class TestApplyStep:
    def test_zero_step_keeps_outcomes(self):
        rng = make_rng(3)
        p = init_random_povm(3, 4, rng)
        moved = apply_step(p, _random_direction(p, rng), 0.0)
        assert np.max(np.abs(moved.elements - p.elements)) <= 1e-12

    @pytest.mark.parametrize("eps", [1e-3, 0.1, 1.0, 10.0])
    def test_completeness(self, eps):
        rng = make_rng(4)
        p = init_random_povm(3, 5, rng)
        moved = apply_step(p, _random_direction(p, rng), eps)
        assert moved.completeness_residual() <= 1e-9

    def test_positivity_on_qubit(self):
        rng = make_rng(5)
        p = Povm.from_elements([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        moved = apply_step(p, _random_direction(p, rng), 0.1)
        for pi in moved.elements:
            eigenvalues = np.linalg.eigvalsh(pi)
            assert eigenvalues[0] >= -1e-10
            assert eigenvalues[-1] <= 1 + 1e-10

    def test_rejects_negative_eps(self):
        p = init_random_povm(2, 2, make_rng(6))
        with pytest.raises(ValueError):
            apply_step(p, DirectionSet(np.zeros_like(p.factors)), -1.0)

    def test_outcome_derivatives_sum_to_zero(self):
        rng = make_rng(7)
        p = init_random_povm(3, 4, rng)
        dpis = outcome_derivatives(p, _random_direction(p, rng))
        np.testing.assert_allclose(dpis.sum(axis=0), 0.0, atol=1e-12)

    def test_slope_matches_finite_difference(self):
        rng = make_rng(8)
        e = random_ensemble(2, 3, rng)
        p = init_random_povm(2, 3, rng)
        g = gradient_operators(e, probability_table(e, p))
        d = _random_direction(p, rng)
        h = 1e-6
        base = mutual_information(probability_table(e, p))
        moved = mutual_information(probability_table(e, apply_step(p, d, h)))
        analytic = directional_slope(p, d, g)
        assert (moved - base) / h == pytest.approx(analytic, rel=1e-3, abs=1e-5)

    def test_gradient_direction_ascends(self):
        rng = make_rng(9)
        e = random_ensemble(3, 3, rng)
        p = init_random_povm(3, 4, rng)
        g = gradient_operators(e, probability_table(e, p))
        d, _ = ascent_direction(p, g, None, True)
        assert directional_slope(p, d, g) > 0

    @pytest.mark.parametrize("eps", [0.0, 1e-4, 0.3, 1.0, 5.0])
    def test_line_objective_matches_apply_step(self, eps):
        rng = make_rng(10)
        e = random_ensemble(3, 4, rng)
        p = init_random_povm(3, 5, rng)
        d = _random_direction(p, rng)
        expected = mutual_information(probability_table(e, apply_step(p, d, eps)))
        assert _line_objective(e, p, d)(eps) == pytest.approx(expected, rel=1e-10, abs=1e-12)

    def test_line_objective_singular_step_is_minus_infinity(self):
        p = Povm(np.array([[[1.0, 0.0], [0.0, 1.0]]], dtype=complex))
        d = DirectionSet(-p.factors)
        e = orthogonal_pair()
        assert _line_objective(e, p, d)(1.0) == -math.inf


# ---------------------------------------------------------------------------
# golden_section_max
# ---------------------------------------------------------------------------
class TestGoldenSectionMax:
    def test_quadratic_peak(self):
        eps, value = golden_section_max(lambda x: -((x - 0.3) ** 2), 1.0)
        assert eps == pytest.approx(0.3, abs=1e-4)
        assert value == pytest.approx(0.0, abs=1e-8)

    def test_monotone_increasing(self):
        eps, _ = golden_section_max(lambda x: x, 1.0, shrink_tol=1e-6)
        assert eps == pytest.approx(1.0, abs=1e-6)

    def test_sine(self):
        eps, value = golden_section_max(lambda x: math.sin(math.pi * x), 1.0)
        assert eps == pytest.approx(0.5, abs=1e-4)
        assert value == pytest.approx(1.0, abs=1e-8)

    def test_never_worse_than_origin(self):
        eps, value = golden_section_max(lambda x: -x, 1.0)
        assert eps == 0.0
        assert value == 0.0

    def test_respects_max_evals(self):
        calls = []

        def f(x):
            calls.append(x)
            return -((x - 0.7) ** 2)

        golden_section_max(f, 1.0, shrink_tol=1e-12, max_evals=10)
        assert len(calls) == 10

    def test_scaled_bracket(self):
        eps, _ = golden_section_max(lambda x: -((x - 3.0) ** 2), 4.0)
        assert eps == pytest.approx(3.0, abs=1e-4)

    def test_rejects_empty_bracket(self):
        with pytest.raises(ValueError):
            golden_section_max(lambda x: x, 0.0)


# ---------------------------------------------------------------------------
# is_converged
# ---------------------------------------------------------------------------
class TestIsConverged:
    def test_zero_gain(self):
        assert is_converged(0.5, 0.5, 1e-6)

    def test_large_gain(self):
        assert not is_converged(0.4, 0.5, 1e-6)

    def test_tiny_gain(self):
        assert is_converged(0.4999999999, 0.5, 1e-6)

    def test_additive_floor(self):
        assert is_converged(0.0, 0.0, 0.0)
        assert is_converged(0.0, 4e-26, 0.0)
        assert not is_converged(0.0, 1e-25, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(
        prev=st.floats(0.0, 10.0),
        gain=st.floats(0.0, 1.0),
        tol=st.floats(0.0, 1e-3),
    )
    def test_matches_inequality(self, prev, gain, tol):
        cur = prev + gain
        expected = 2.0 * (cur - prev) <= tol * (cur + prev) + 1.0e-25
        assert is_converged(prev, cur, tol) == expected


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------
class TestRun:
    def test_orthogonal_pair(self):
        report = run(orthogonal_pair(), OptimizerConfig(seed=1), k_init=2)
        assert report.accessible_information == pytest.approx(1.0, abs=1e-6)
        assert report.converged
        assert report.iterations <= 500
        assert report.iterations == len(report.mi_trace)

    def test_identical_letters(self):
        sigma = np.array([[0.6, 0.1j], [-0.1j, 0.4]])
        e = Ensemble.from_matrices([sigma / 2, sigma / 2])
        report = run(e, OptimizerConfig(seed=2), k_init=3)
        assert report.accessible_information <= 1e-9
        assert report.converged
        assert report.iterations == 1

    def test_fixed_point_stops_immediately(self):
        e = Ensemble.from_matrices([np.eye(2) / 4, np.eye(2) / 4])
        report = run(e, OptimizerConfig(seed=3), k_init=2)
        assert report.iterations == 1
        assert report.mi_trace[0] == pytest.approx(report.initial_mi, abs=1e-12)

    def test_monotone_and_feasible(self):
        e = random_ensemble(3, 4, make_rng(10))
        report = run(e, OptimizerConfig(seed=4, max_iterations=200), k_init=5)
        trace = [report.initial_mi] + report.mi_trace
        assert all(b >= a - 1e-12 for a, b in zip(trace, trace[1:]))
        assert report.final_povm.completeness_residual() <= 1e-9
        assert report.final_povm.min_eigenvalue() >= -1e-10

    def test_seed_determinism(self):
        e = random_ensemble(2, 3, make_rng(11))
        cfg = OptimizerConfig(seed=5, steepest_prob=0.3, max_iterations=100)
        a = run(e, cfg, k_init=4)
        b = run(e, cfg, k_init=4)
        assert a.mi_trace == b.mi_trace
        assert np.array_equal(a.final_povm.factors, b.final_povm.factors)

    def test_steepest_only(self):
        e = random_ensemble(2, 3, make_rng(12))
        report = run(e, OptimizerConfig(seed=6, steepest_prob=1.0, max_iterations=50), k_init=3)
        assert report.steepest_steps == report.iterations

    def test_iteration_cap(self):
        e = random_ensemble(3, 3, make_rng(13))
        report = run(e, OptimizerConfig(seed=7, tolerance=0.0, max_iterations=5), k_init=9)
        assert report.iterations == 5
        assert not report.converged

    def test_default_k_is_dim_squared(self):
        e = random_ensemble(2, 2, make_rng(14))
        report = run(e, OptimizerConfig(seed=8, max_iterations=3))
        assert report.k_init == 4
        assert report.final_povm.num_outcomes == 4

    def test_restarts_report_best(self):
        e = random_ensemble(2, 3, make_rng(15))
        report = run(e, OptimizerConfig(seed=9, restarts=3, max_iterations=20), k_init=3)
        assert len(report.restart_mis) == 3
        assert report.accessible_information == max(report.restart_mis)
        assert report.restart_mis.index(max(report.restart_mis)) == report.best_restart
        assert report.seed == 9 + report.best_restart

    def test_restart_uses_derived_seed(self):
        e = random_ensemble(2, 3, make_rng(16))
        multi = run(e, OptimizerConfig(seed=20, restarts=2, max_iterations=20), k_init=3)
        single = run(e, OptimizerConfig(seed=21, max_iterations=20), k_init=3)
        assert multi.restart_mis[1] == single.accessible_information

    def test_progress_callback(self):
        seen = []
        run(
            orthogonal_pair(),
            OptimizerConfig(seed=1, max_iterations=10),
            k_init=2,
            on_progress=lambda r, i, mi: seen.append((r, i)),
        )
        assert seen[0] == (0, 1)
        assert [i for _, i in seen] == list(range(1, len(seen) + 1))

    def test_invalid_ensemble(self):
        e = Ensemble.from_matrices([np.eye(2) / 2, np.eye(2) / 2])
        with pytest.raises(InvalidEnsemble):
            run(e, OptimizerConfig())

    def test_reduced_povm_never_larger(self):
        report = run(orthogonal_pair(), OptimizerConfig(seed=1), k_init=4)
        assert report.reduced_povm.num_outcomes <= report.final_povm.num_outcomes
        assert report.reduced_povm.completeness_residual() <= 1e-9
