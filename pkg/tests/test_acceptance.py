"""End-to-end acceptance checks: benchmark behavior, optimality, determinism.

Each test pins one externally meaningful property of the package at the
benchmark scales it targets, with an explicit wall-clock budget.
"""

import math
import time

import numpy as np
import pytest

from batchbandit import (
    BatchData,
    ExperimentConfig,
    Instance,
    c_star,
    compute_gaps,
    frank_wolfe_design,
    least_squares,
    make_end_of_optimism,
    run_e4,
    run_experiment,
    run_phaelimd,
    run_rs_oful,
    solve_oracle_allocation,
)

from oracles import grid_min_allocation, min_norm_theta


def test_stopping_rule_ends_benchmark_runs_in_three_batches():
    # d=2, eps=0.2, T=1e4: the adaptive allocation must gather enough
    # evidence for the stopping rule at batch two, giving exactly three
    # batches (explore, allocate+stop, exploit) in at least 8 of 10 trials.
    inst = make_end_of_optimism(2, 0.2)
    started = time.perf_counter()
    counts = [
        run_e4(inst, 10_000, rng=np.random.default_rng(seed)).batch_count
        for seed in range(10)
    ]
    elapsed = time.perf_counter() - started
    assert sum(1 for c in counts if c == 3) >= 8, counts
    assert elapsed < 10.0


def test_baseline_batch_counts_on_benchmark():
    # Same instance and horizon: phased elimination needs four batches in at
    # least 8 of 10 trials, and the rarely-switching optimism baseline
    # averages between 34 and 40 policy switches.
    inst = make_end_of_optimism(2, 0.2)
    started = time.perf_counter()
    phased = [
        run_phaelimd(inst, 10_000, rng=np.random.default_rng(seed)).batch_count
        for seed in range(10)
    ]
    optimism = [
        run_rs_oful(inst, 10_000, rng=np.random.default_rng(seed)).batch_count
        for seed in range(10)
    ]
    elapsed = time.perf_counter() - started
    assert sum(1 for c in phased if c == 4) >= 8, phased
    mean_switches = float(np.mean(optimism))
    assert 34.0 <= mean_switches <= 40.0, optimism
    assert elapsed < 60.0


def test_adaptive_allocation_beats_both_baselines_on_harder_instance():
    # d=5 (nine arms), eps=0.2, T=1e5, 10 trials per algorithm: the
    # allocation-based algorithm must achieve strictly lower mean final
    # regret than both baselines.
    inst = make_end_of_optimism(5, 0.2)
    T = 100_000
    started = time.perf_counter()

    def final_regrets(runner):
        return [
            runner(np.random.default_rng(seed)).regret_checkpoints[-1][1]
            for seed in range(10)
        ]

    adaptive = final_regrets(lambda rng: run_e4(inst, T, rng=rng))
    phased = final_regrets(lambda rng: run_phaelimd(inst, T, rng=rng))
    optimism = final_regrets(lambda rng: run_rs_oful(inst, T, rng=rng))
    elapsed = time.perf_counter() - started
    assert float(np.mean(adaptive)) < float(np.mean(phased))
    assert float(np.mean(adaptive)) < float(np.mean(optimism))
    assert elapsed < 600.0


def test_instance_complexity_matches_two_armed_closed_form():
    # Orthogonal two-armed instance with gap delta: complexity is 2/delta.
    started = time.perf_counter()
    for delta in (0.25, 0.5, 1.0):
        inst = Instance(
            arms=np.eye(2), theta_star=np.array([1.0, 1.0 - delta])
        )
        value = c_star(inst)
        assert value == pytest.approx(2.0 / delta, rel=0.01), delta
    assert time.perf_counter() - started < 1.0


def test_oracle_allocation_matches_exhaustive_grid_search():
    # d=2 instances with at most three arms: the solver's objective must be
    # within 2% of a staged exhaustive grid search over the weights.
    started = time.perf_counter()
    cases = [
        make_end_of_optimism(2, 0.2),
        make_end_of_optimism(2, 0.4),
        Instance(arms=np.eye(2), theta_star=np.array([1.0, 0.5])),
    ]
    for inst in cases:
        profile = compute_gaps(inst)
        alloc = solve_oracle_allocation(profile, inst.arms)
        coeffs = profile.gaps.copy()
        coeffs[profile.best_index] = 1.0
        grid = grid_min_allocation(
            inst.arms, profile.best_index, coeffs, cap=1e8
        )
        assert alloc.objective == pytest.approx(grid, rel=0.02), inst.label
    assert time.perf_counter() - started < 30.0


def test_design_certificate_on_fifty_random_arm_sets():
    # Kiefer-Wolfowitz: the design's worst-case leverage must certify within
    # 0.1% of the dimension on random spanning arm sets up to d=10, K=30.
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    for _ in range(50):
        d = int(rng.integers(2, 11))
        K = int(rng.integers(d, 31))
        arms = rng.standard_normal((K, d))
        design = frank_wolfe_design(arms, tol=1e-3)
        assert design.converged
        assert design.g_value <= 1.001 * d
    assert time.perf_counter() - started < 10.0


def test_firing_implies_correct_identification():
    # 200 noisy trials at T=1e4: whenever the stopping rule fires, the
    # identified arm must be the true best in at least 99% of those trials,
    # and the true best arm must never be eliminated.
    inst = make_end_of_optimism(2, 0.2)
    started = time.perf_counter()
    fired = 0
    fired_correct = 0
    for seed in range(200):
        result = run_e4(inst, 10_000, rng=np.random.default_rng(seed))
        for batch in result.batches:
            assert 0 in batch.active_after, seed
        verdicts = [
            b.stop_verdict for b in result.batches if b.stop_verdict is not None
        ]
        if any(v.holds for v in verdicts):
            fired += 1
            if result.identified_best == 0:
                fired_correct += 1
    elapsed = time.perf_counter() - started
    assert fired > 0
    assert fired_correct >= 0.99 * fired, (fired_correct, fired)
    assert elapsed < 180.0


def test_least_squares_agrees_with_min_norm_oracle():
    # 100 random datasets, 40 of them rank-deficient: the batch estimator
    # must match the SVD-based minimum-norm solution to 1e-8.
    rng = np.random.default_rng(99)
    worst = 0.0
    for case in range(100):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(d + 2, 60))
        if case % 5 < 2:
            # Rank-deficient design: pulls confined to a proper subspace.
            r_dim = int(rng.integers(1, d))
            basis = np.linalg.qr(rng.standard_normal((d, r_dim)))[0]
            X = rng.standard_normal((n, r_dim)) @ basis.T
        else:
            X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        est = least_squares(BatchData(arm_vectors=X, rewards=y), np.eye(d))
        diff = float(np.max(np.abs(est.theta_hat - min_norm_theta(X, y))))
        worst = max(worst, diff)
    assert worst <= 1e-8, worst


def test_csv_artifacts_are_byte_identical_across_runs_and_workers(tmp_path):
    # The benchmark artifacts must be a pure function of the configuration:
    # identical bytes on repeat runs and independent of the worker count.
    def cfg(out, jobs=1):
        return ExperimentConfig(
            instance_spec="endoa:d=2,eps=0.2",
            algorithms=("e4", "phaelimd", "rsoful"),
            horizon=2_000,
            trials=3,
            base_seed=0,
            output_dir=str(out),
            jobs=jobs,
        )

    first = run_experiment(cfg(tmp_path / "a"))
    second = run_experiment(cfg(tmp_path / "b"))
    parallel = run_experiment(cfg(tmp_path / "c", jobs=3))
    for f, s, p in zip(first, second, parallel):
        blob = open(f, "rb").read()
        assert blob == open(s, "rb").read()
        assert blob == open(p, "rb").read()
