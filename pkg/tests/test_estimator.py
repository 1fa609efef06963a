"""Tests for batch least squares, the evidence statistic, and the stopping rule."""

import math

import numpy as np
import pytest

from batchbandit import (
    BatchData,
    beta_threshold,
    check_stopping_rule,
    least_squares,
    make_end_of_optimism,
    stopping_statistic,
)

from oracles import beta_formula, lambda_min_2x2, min_norm_theta


def noise_free_batch(arms: np.ndarray, counts: dict[int, int], theta: np.ndarray) -> BatchData:
    pulls = []
    for arm, n in counts.items():
        x = arms[arm]
        for _ in range(n):
            pulls.append((x, float(x @ theta)))
    return BatchData.from_pulls(pulls)


class TestBatchData:
    def test_sufficient_statistics_match_raw_pulls(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((8, 3))
        r = rng.standard_normal(8)
        data = BatchData(arm_vectors=X, rewards=r)
        np.testing.assert_allclose(data.gram, X.T @ X, atol=1e-12)
        np.testing.assert_allclose(data.moment, X.T @ r, atol=1e-12)
        assert data.size == 8

    def test_from_pulls_round_trip(self):
        pulls = [(np.array([1.0, 0.0]), 0.9), (np.array([0.0, 1.0]), -0.3)]
        data = BatchData.from_pulls(pulls)
        assert data.size == 2
        recovered = data.pulls
        np.testing.assert_allclose(recovered[0][0], [1.0, 0.0])
        assert recovered[1][1] == -0.3

    def test_mismatched_rewards_raise(self):
        with pytest.raises(ValueError, match="one reward per"):
            BatchData(arm_vectors=np.ones((3, 2)), rewards=np.ones(2))

    def test_arrays_are_read_only(self):
        data = BatchData(arm_vectors=np.ones((2, 2)), rewards=np.ones(2))
        with pytest.raises((ValueError, RuntimeError)):
            data.rewards[0] = 5.0


class TestLeastSquares:
    def test_matches_min_norm_oracle_well_conditioned(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((40, 4))
        r = rng.standard_normal(40)
        data = BatchData(arm_vectors=X, rewards=r)
        est = least_squares(data, arms=np.eye(4))
        np.testing.assert_allclose(est.theta_hat, min_norm_theta(X, r), atol=1e-8)

    def test_singular_design_uses_min_norm_solution(self):
        # Pulls only along e1 in R^2: the e2 component must stay zero.
        X = np.array([[1.0, 0.0]] * 5)
        r = np.array([1.1, 0.9, 1.0, 1.05, 0.95])
        data = BatchData(arm_vectors=X, rewards=r)
        est = least_squares(data, arms=np.eye(2))
        np.testing.assert_allclose(est.theta_hat, min_norm_theta(X, r), atol=1e-10)
        assert est.theta_hat[1] == pytest.approx(0.0, abs=1e-12)

    def test_ranking_fields(self):
        arms = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        r = np.array([1.0, 0.4])
        est = least_squares(BatchData(arm_vectors=X, rewards=r), arms)
        np.testing.assert_allclose(est.mu_hat, [1.0, 0.4, 0.7], atol=1e-12)
        assert est.best_hat == 0
        np.testing.assert_allclose(est.gaps_hat, [0.0, 0.6, 0.3], atol=1e-12)
        assert np.all(est.gaps_hat >= 0)

    def test_tie_breaks_to_lowest_index(self):
        arms = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        X = np.vstack([np.eye(2)] * 3)
        r = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        est = least_squares(BatchData(arm_vectors=X, rewards=r), arms)
        assert est.best_hat == 0

    def test_empty_batch_raises(self):
        data = BatchData.from_pulls([])
        with pytest.raises(ValueError, match="empty batch"):
            least_squares(data, arms=np.eye(2))


class TestStoppingStatistic:
    def test_hand_trace_on_structured_instance(self):
        # 100 noise-free pulls of each basis arm on the d=2, eps=0.2 geometry:
        # H = 100 I.  The clone arm (0.8, 0.4) has direction (-0.2, 0.4) from
        # the best arm, squared weighted norm 0.2/100 = 0.002, estimated gap
        # 0.2, so its term is 0.04 / 0.004 = 10.  The basis arm's term is 25,
        # hence Z = 10.
        inst = make_end_of_optimism(2, 0.2)
        data = noise_free_batch(inst.arms, {0: 100, 1: 100}, inst.theta_star)
        est = least_squares(data, inst.arms)
        z = stopping_statistic(est, data, inst.arms)
        assert z == pytest.approx(10.0, rel=1e-9)

    def test_off_span_direction_gives_zero_evidence(self):
        arms = np.eye(2)
        X = np.array([[1.0, 0.0]] * 4)
        r = np.full(4, 1.0)
        data = BatchData(arm_vectors=X, rewards=r)
        est = least_squares(data, arms)
        assert est.best_hat == 0
        assert stopping_statistic(est, data, arms) == 0.0

    def test_duplicate_of_best_arm_gives_zero_evidence(self):
        arms = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        data = noise_free_batch(arms, {0: 10, 2: 10}, np.array([1.0, 0.0]))
        est = least_squares(data, arms)
        assert stopping_statistic(est, data, arms) == 0.0

    def test_single_active_arm_is_infinite_evidence(self):
        arms = np.array([[1.0]])
        data = BatchData(arm_vectors=np.array([[1.0]]), rewards=np.array([1.0]))
        est = least_squares(data, arms)
        assert stopping_statistic(est, data, arms) == math.inf

    def test_statistic_grows_linearly_with_pull_counts(self):
        inst = make_end_of_optimism(2, 0.2)
        theta = inst.theta_star

        def z_at(n):
            data = noise_free_batch(inst.arms, {0: n, 1: n}, theta)
            est = least_squares(data, inst.arms)
            return stopping_statistic(est, data, inst.arms)

        assert z_at(200) == pytest.approx(2 * z_at(100), rel=1e-9)


class TestBetaThreshold:
    def test_closed_form_value(self):
        # T = e^e makes log log T exactly 1, so
        # beta(4, 1/2) = 2 (log 4 + log 2) = 2 log 8.
        val = beta_threshold(4, 0.5, math.e**math.e, 2)
        assert val == pytest.approx(2.0 * math.log(8.0), rel=1e-12)

    def test_frozen_benchmark_value(self):
        assert beta_threshold(200, 1e-4, 1e4, 2) == pytest.approx(
            22.20003250389045, rel=1e-12
        )

    def test_matches_single_expression_oracle(self):
        for t in (1, 7, 500):
            for delta in (0.3, 1e-3):
                for T in (1e4, 1e6):
                    for d in (1, 2, 8):
                        assert beta_threshold(t, delta, T, d) == pytest.approx(
                            beta_formula(t, delta, T, d), rel=1e-12
                        )

    def test_monotonicity(self):
        assert beta_threshold(10, 0.1, 1e4, 2) < beta_threshold(20, 0.1, 1e4, 2)
        assert beta_threshold(10, 0.1, 1e4, 2) < beta_threshold(10, 0.01, 1e4, 2)
        assert beta_threshold(10, 0.1, 1e4, 2) < beta_threshold(10, 0.1, 1e4, 3)

    def test_zero_dimension_reduces_to_confidence_term(self):
        T = 1e4
        llT = math.log(math.log(T))
        expected = (1.0 + 1.0 / llT) * math.log(10.0)
        assert beta_threshold(5, 0.1, T, 0) == pytest.approx(expected, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="t must be"):
            beta_threshold(0, 0.1, 1e4, 2)
        with pytest.raises(ValueError, match="delta"):
            beta_threshold(1, 0.0, 1e4, 2)
        with pytest.raises(ValueError, match="delta"):
            beta_threshold(1, 1.0, 1e4, 2)
        with pytest.raises(ValueError, match="too small"):
            beta_threshold(1, 0.1, math.e, 2)


class TestStoppingRule:
    def test_hand_trace_fires_with_documented_diagnostics(self):
        inst = make_end_of_optimism(2, 0.2)
        data = noise_free_batch(inst.arms, {0: 100, 1: 100}, inst.theta_star)
        est = least_squares(data, inst.arms)
        verdict = check_stopping_rule(est, data, inst.arms, T=1e4)
        assert verdict.holds
        diag = verdict.diagnostics
        assert diag["Z"] == pytest.approx(10.0, rel=1e-9)
        assert diag["beta"] == pytest.approx(22.20003250389045, rel=1e-12)
        assert diag["threshold"] == pytest.approx(0.35 * diag["beta"], rel=1e-12)
        assert diag["min_eigenvalue"] == pytest.approx(100.0, rel=1e-12)
        # The longest arm on this geometry is a unit basis vector.
        assert diag["required_min_eigenvalue"] == pytest.approx(1.0, rel=1e-12)

    def test_eigenvalue_floor_is_max_squared_arm_norm(self):
        arms = np.array([[2.0, 0.0], [0.0, 1.0]])
        data = noise_free_batch(arms, {0: 1, 1: 1}, np.array([1.0, 0.0]))
        est = least_squares(data, arms)
        verdict = check_stopping_rule(est, data, arms, T=1e4)
        assert verdict.diagnostics["required_min_eigenvalue"] == pytest.approx(4.0)

    def test_coverage_failure_blocks_firing_despite_large_statistic(self):
        # Massive evidence along e1, none along e2: min eigenvalue is zero,
        # so the rule must not fire even though Z would be infinite without
        # the second arm direction.
        arms = np.array([[1.0, 0.0], [0.9, 0.0]])
        X = np.array([[1.0, 0.0]] * 1000)
        rng = np.random.default_rng(0)
        r = 1.0 + 0.01 * rng.standard_normal(1000)
        data = BatchData(arm_vectors=X, rewards=r)
        est = least_squares(data, arms)
        verdict = check_stopping_rule(est, data, arms, T=1e4)
        assert verdict.diagnostics["Z"] > verdict.diagnostics["threshold"]
        assert verdict.diagnostics["min_eigenvalue"] == pytest.approx(0.0, abs=1e-9)
        assert not verdict.holds

    def test_small_samples_do_not_fire(self):
        inst = make_end_of_optimism(2, 0.2)
        data = noise_free_batch(inst.arms, {0: 2, 1: 2}, inst.theta_star)
        est = least_squares(data, inst.arms)
        verdict = check_stopping_rule(est, data, inst.arms, T=1e4)
        assert not verdict.holds

    def test_threshold_scale_parameter_is_honored(self):
        inst = make_end_of_optimism(2, 0.2)
        data = noise_free_batch(inst.arms, {0: 100, 1: 100}, inst.theta_star)
        est = least_squares(data, inst.arms)
        strict = check_stopping_rule(
            est, data, inst.arms, T=1e4, threshold_scale=1.0
        )
        # Z = 10 < beta = 22.2: the unscaled rule must not fire here.
        assert not strict.holds
        assert strict.diagnostics["threshold"] == pytest.approx(
            strict.diagnostics["beta"], rel=1e-12
        )

    def test_min_eigenvalue_matches_closed_form_oracle(self):
        inst = make_end_of_optimism(2, 0.2)
        data = noise_free_batch(inst.arms, {0: 30, 1: 20, 2: 7}, inst.theta_star)
        est = least_squares(data, inst.arms)
        verdict = check_stopping_rule(est, data, inst.arms, T=1e4)
        assert verdict.diagnostics["min_eigenvalue"] == pytest.approx(
            lambda_min_2x2(np.asarray(data.gram)), rel=1e-10
        )
