"""Benchmark library for batched linear bandits.

Environments (structured and random linear-bandit instances), D-optimal
exploration designs, per-batch least-squares estimation with a
sequential-testing stopping rule, optimal pull allocations, three batched
algorithms, and a CLI harness that writes aggregate CSV artifacts.
"""

from .allocation import (
    ORACLE_CAP,
    AllocConfig,
    Allocation,
    c_star,
    make_alloc_config,
    solve_allocation,
    solve_oracle_allocation,
)
from .algorithms import (
    DEFAULT_BATCH1_BOOST,
    DEFAULT_BATCH2_BUDGET_FRACTION,
    DEFAULT_RUNNER_GAP_FLOOR,
    BatchLog,
    Schedule,
    TrialResult,
    run_e4,
    run_phaelimd,
    run_rs_oful,
)
from .design import DesignWeights, frank_wolfe_design, pull_counts
from .env import (
    GapProfile,
    Instance,
    compute_gaps,
    load_instance,
    make_end_of_optimism,
    make_random_instance,
    sample_reward,
    save_instance,
)
from .estimator import (
    DEFAULT_THRESHOLD_SCALE,
    BatchData,
    Estimate,
    StoppingVerdict,
    beta_threshold,
    check_stopping_rule,
    least_squares,
    stopping_statistic,
)
from .harness import (
    ALGORITHMS,
    DEFAULT_SWEEP_EPSILONS,
    ExperimentConfig,
    main,
    parse_cli,
    parse_instance_spec,
    run_experiment,
    sweep_epsilon,
)

__version__ = "0.1.0"

__all__ = [
    "Instance",
    "GapProfile",
    "make_end_of_optimism",
    "make_random_instance",
    "sample_reward",
    "compute_gaps",
    "save_instance",
    "load_instance",
    "DesignWeights",
    "frank_wolfe_design",
    "pull_counts",
    "BatchData",
    "Estimate",
    "StoppingVerdict",
    "least_squares",
    "stopping_statistic",
    "beta_threshold",
    "check_stopping_rule",
    "DEFAULT_THRESHOLD_SCALE",
    "Allocation",
    "AllocConfig",
    "make_alloc_config",
    "solve_allocation",
    "solve_oracle_allocation",
    "c_star",
    "ORACLE_CAP",
    "Schedule",
    "BatchLog",
    "TrialResult",
    "run_e4",
    "run_phaelimd",
    "run_rs_oful",
    "DEFAULT_BATCH1_BOOST",
    "DEFAULT_BATCH2_BUDGET_FRACTION",
    "DEFAULT_RUNNER_GAP_FLOOR",
    "ExperimentConfig",
    "parse_instance_spec",
    "run_experiment",
    "sweep_epsilon",
    "parse_cli",
    "main",
    "ALGORITHMS",
    "DEFAULT_SWEEP_EPSILONS",
    "__version__",
]
