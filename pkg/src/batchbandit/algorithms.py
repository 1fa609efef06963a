"""Batched linear-bandit algorithms producing per-trial traces.

Three algorithms on a common trial skeleton:

* :func:`run_e4` — four-stage batching: one D-optimal exploration batch, one
  allocation-driven estimation batch ending in a stopping-rule check, a
  phased-elimination loop for the trials where the check does not fire, and
  a terminal exploitation stretch on the surviving arm.
* :func:`run_phaelimd` — phased elimination with D-optimal exploration at a
  doubling exponent rate, as the slow-but-safe baseline.
* :func:`run_rs_oful` — optimism with ridge regression, recomputing its
  policy only when the information matrix determinant has grown by a
  constant factor, as the many-batches baseline.

Every batch's pulls are truncated to the horizon: when a prescription does
not fit, a round-robin prefix of it is pulled, estimation still runs on
whatever was pulled, and the trial ends at exactly T pulls.  Cumulative
regret is tracked with true gaps (the expected regret of the realized pull
sequence) and recorded every max(1, T // 1000) steps plus at every batch
boundary.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .allocation import AllocConfig, make_alloc_config, solve_allocation
from .design import frank_wolfe_design, pull_counts
from .env import Instance, compute_gaps
from .estimator import (
    DEFAULT_THRESHOLD_SCALE,
    BatchData,
    Estimate,
    StoppingVerdict,
    check_stopping_rule,
    least_squares,
)

__all__ = [
    "Schedule",
    "BatchLog",
    "TrialResult",
    "run_e4",
    "run_phaelimd",
    "run_rs_oful",
    "DEFAULT_BATCH1_BOOST",
    "DEFAULT_BATCH2_BUDGET_FRACTION",
    "DEFAULT_RUNNER_GAP_FLOOR",
]

# Calibrated defaults for run_e4 at benchmark horizons (1e4..1e5).  The
# asymptotic rate prescriptions are sized for horizons far beyond desk
# scale; at T = 1e4 they put single-digit pulls into the exploration batch,
# which no estimator survives.  These constants inflate the first two
# batches while keeping their budget a vanishing fraction of T:
#
# * batch 1 pulls at rate DEFAULT_BATCH1_BOOST * (log T)^(1+gamma) instead
#   of (log T)^(1/2), so the batch-1 estimate is accurate enough for the
#   allocation program to target the right arms;
# * the batch-2 per-arm cap is max((log T)^(1+gamma), floor(kappa * (T -
#   t1) / K)) with kappa = DEFAULT_BATCH2_BUDGET_FRACTION, so batch 2 may
#   spend up to a quarter of the remaining budget when the allocation asks
#   for it — enough evidence mass for the stopping statistic to clear its
#   threshold;
# * allocation coefficients are floored at DEFAULT_RUNNER_GAP_FLOOR of the
#   estimated gap (the slack-subtracted coefficient is negative at these
#   horizons; see solve_allocation).
DEFAULT_BATCH1_BOOST = 4.0
DEFAULT_BATCH2_BUDGET_FRACTION = 0.25
DEFAULT_RUNNER_GAP_FLOOR = 0.6

_SCHEDULE_KINDS = ("t1", "t2")


@dataclass(frozen=True)
class Schedule:
    """Exploration-rate schedule for the elimination loop.

    Both kinds share the first three rates: T_1 = T_2 = (log T)^(1/2) and
    T_3 = (log T)^(1+gamma).  From batch 4 on, kind ``t1`` uses
    T_ell = T^(1 - 1/2^(ell-3)) (horizon-anchored doubling exponents) and
    kind ``t2`` uses T_ell = d * log(K T^2) * 2^(ell-3) (horizon-free
    doubling).
    """

    kind: str = "t1"
    gamma: float = 0.9

    def __post_init__(self) -> None:
        kind = str(self.kind).lower()
        if kind not in _SCHEDULE_KINDS:
            raise ValueError(f"schedule kind must be one of {_SCHEDULE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")

    def rate(self, ell: int, T: float, d: int, K: int) -> float:
        """Exploration rate T_ell for batch ``ell`` at horizon T."""
        if ell < 1:
            raise ValueError(f"batch index must be >= 1, got {ell}")
        log_T = math.log(T)
        if ell <= 2:
            return math.sqrt(log_T)
        if ell == 3:
            return log_T ** (1.0 + self.gamma)
        if self.kind == "t1":
            return T ** (1.0 - 0.5 ** (ell - 3))
        return d * math.log(K * T * T) * 2.0 ** (ell - 3)


@dataclass(frozen=True)
class BatchLog:
    """Record of one executed batch.

    Attributes:
        index: 1-based batch number.
        pulls: executed pull count per arm index (prescription after any
            horizon truncation; zero-count arms omitted).
        size: total executed pulls, always sum(pulls.values()).
        estimate: the estimate computed from this batch's own pulls, or
            None for batches that compute none (exploitation), or the
            cumulative ridge estimate for the optimism baseline.
        active_after: arm indices still active after this batch.
        stop_verdict: stopping-rule diagnostics when the rule was evaluated
            on this batch.
        data: the batch's pull-level data when per-batch estimation ran,
            for recomputing ``estimate`` from the log.
    """

    index: int
    pulls: dict[int, int]
    size: int
    estimate: Estimate | None
    active_after: frozenset[int]
    stop_verdict: StoppingVerdict | None = None
    data: BatchData | None = None


@dataclass(frozen=True)
class TrialResult:
    """One seeded run of one algorithm on one instance.

    Attributes:
        regret_checkpoints: (t, cumulative expected regret) pairs, strictly
            increasing in t, final entry at t = T exactly.
        batch_count: number of batches, exploitation included.
        batches: per-batch records.
        identified_best: the arm the algorithm would commit to at the end.
        wall_clock: elapsed seconds for the run.
    """

    regret_checkpoints: list[tuple[int, float]]
    batch_count: int
    batches: list[BatchLog]
    identified_best: int
    wall_clock: float


class _Runner:
    """Shared trial bookkeeping: horizon, RNG, regret checkpoints, logs."""

    def __init__(self, inst: Instance, T: int, rng: np.random.Generator):
        self.inst = inst
        self.T = T
        self.rng = rng
        self.mu = inst.means()
        self.gaps = float(np.max(self.mu)) - self.mu
        self.step = max(1, T // 1000)
        self.t = 0
        self.cum_regret = 0.0
        self.checkpoints: list[tuple[int, float]] = []
        self.batches: list[BatchLog] = []

    def _record(self, t: int, regret: float) -> None:
        if not self.checkpoints or self.checkpoints[-1][0] < t:
            self.checkpoints.append((t, regret))

    def execute(
        self, counts: dict[int, int], sample: bool
    ) -> tuple[dict[int, int], BatchData | None, bool]:
        """Pull a prescription, truncated to the horizon.

        Pulls proceed round-robin over the prescribed arms (ascending index
        within each round) so a truncation takes a prefix of that order.
        Returns the executed counts, the batch data (None when ``sample``
        is False), and whether truncation occurred.
        """
        arm_ids = np.array(sorted(a for a in counts if counts[a] > 0), dtype=int)
        if arm_ids.size == 0:
            return {}, None, False
        c = np.array([counts[a] for a in arm_ids], dtype=int)
        room = self.T - self.t
        total = int(c.sum())
        n_exec = min(total, room)
        truncated = n_exec < total
        if n_exec == 0:
            return {}, None, truncated

        # Round-robin order: row-major traversal of the (round, arm) grid.
        rounds = int(c.max())
        mask = np.arange(rounds)[:, None] < c[None, :]
        arm_seq = np.broadcast_to(arm_ids, mask.shape)[mask][:n_exec]
        exec_counts_vec = np.bincount(arm_seq, minlength=self.inst.n_arms)[arm_ids]

        cum = self.cum_regret + np.cumsum(self.gaps[arm_seq])
        t0 = self.t
        first_tick = (t0 // self.step + 1) * self.step
        for tick in range(first_tick, t0 + n_exec + 1, self.step):
            self._record(tick, float(cum[tick - t0 - 1]))
        self.t = t0 + n_exec
        self.cum_regret = float(cum[-1])
        self._record(self.t, self.cum_regret)

        data = None
        if sample:
            xs = []
            rs = []
            for a, cnt in zip(arm_ids, exec_counts_vec):
                if cnt == 0:
                    continue
                noise = self.inst.noise_std * self.rng.standard_normal(int(cnt))
                rs.append(self.mu[a] + noise)
                xs.append(np.broadcast_to(self.inst.arms[a], (int(cnt), self.inst.dim)))
            data = BatchData(
                arm_vectors=np.concatenate(xs), rewards=np.concatenate(rs)
            )
        executed = {
            int(a): int(n) for a, n in zip(arm_ids, exec_counts_vec) if n > 0
        }
        return executed, data, truncated

    def log_batch(
        self,
        pulls: dict[int, int],
        estimate: Estimate | None,
        active_after,
        stop_verdict: StoppingVerdict | None = None,
        data: BatchData | None = None,
    ) -> None:
        self.batches.append(
            BatchLog(
                index=len(self.batches) + 1,
                pulls=pulls,
                size=sum(pulls.values()),
                estimate=estimate,
                active_after=frozenset(active_after),
                stop_verdict=stop_verdict,
                data=data,
            )
        )

    def finish(self, identified_best: int, started: float) -> TrialResult:
        self._record(self.t, self.cum_regret)
        return TrialResult(
            regret_checkpoints=self.checkpoints,
            batch_count=len(self.batches),
            batches=self.batches,
            identified_best=int(identified_best),
            wall_clock=time.perf_counter() - started,
        )


def _best_active(est: Estimate, active: list[int]) -> int:
    """Empirically best arm among the active set (lowest index on ties)."""
    sub = np.array(active, dtype=int)
    return int(sub[np.argmax(est.mu_hat[sub])])


def _exploit(run: _Runner, arm: int) -> None:
    """Pull one arm for the remaining budget as a final batch."""
    remaining = run.T - run.t
    if remaining <= 0:
        return
    executed, _, _ = run.execute({arm: remaining}, sample=False)
    run.log_batch(executed, None, frozenset({arm}))


def run_e4(
    inst: Instance,
    T: int,
    sched: Schedule | None = None,
    cfg: AllocConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    batch1_boost: float = DEFAULT_BATCH1_BOOST,
    batch2_budget_fraction: float = DEFAULT_BATCH2_BUDGET_FRACTION,
    stopping_threshold_scale: float = DEFAULT_THRESHOLD_SCALE,
) -> TrialResult:
    """Explore, estimate with a stopping check, eliminate, exploit.

    Batch 1 pulls a D-optimal design over all arms and fits least squares
    on that batch alone.  The estimated gaps feed the allocation program;
    batch 2 pulls the design at rate (log T)^(1/2) plus, for every arm x,
    n_x = ceil(min(w_x * alpha * log T, N2)) allocation pulls, where N2 =
    max(ceil((log T)^(1+gamma)), floor(kappa * (T - t1) / K)) and the
    best-arm weight cap is max((log T)^gamma, N2 / log T) / alpha.  A fresh
    least-squares fit is then tested against the stopping rule: if it
    holds, only the estimated best arm stays active and the trial jumps to
    exploitation.  Otherwise batches ell >= 3 run phased elimination at the
    schedule's rates with threshold 2 * eps_ell, eps_ell =
    sqrt(d * log(K T^2) / T_ell), until one arm remains or the horizon
    ends.  The remaining budget exploits the surviving arm.

    Raises ValueError when T < 16 or the mandatory design pulls of batches
    1-2 exceed T.
    """
    started = time.perf_counter()
    T = int(T)
    if T < 16:
        raise ValueError(f"horizon must be at least 16, got {T}")
    if rng is None:
        rng = np.random.default_rng()
    if sched is None:
        sched = Schedule()
    d, K = inst.dim, inst.n_arms
    if cfg is None:
        cfg = make_alloc_config(
            d, T, gamma=sched.gamma, gap_floor_fraction=DEFAULT_RUNNER_GAP_FLOOR
        )
    log_T = math.log(T)
    run = _Runner(inst, T, rng)
    active = list(range(K))

    # Batch 1: boosted D-optimal exploration, estimate from this batch only.
    design = frank_wolfe_design(inst.arms)
    M1 = batch1_boost * log_T ** (1.0 + sched.gamma)
    f1 = pull_counts(design, M1, d)
    f2 = pull_counts(design, sched.rate(2, T, d, K), d)
    if sum(f1.values()) + sum(f2.values()) > T:
        raise ValueError(
            f"horizon {T} too small for the mandatory pulls of batches 1-2"
        )
    counts1, data1, truncated = run.execute(f1, sample=True)
    est1 = least_squares(data1, inst.arms)
    run.log_batch(counts1, est1, active, data=data1)
    last_est = est1

    verdict = None
    if not truncated and run.t < T:
        # Batch 2: design pulls plus allocation pulls, then the stopping check.
        t1 = run.t
        N2 = max(
            math.ceil(log_T ** (1.0 + sched.gamma)),
            int(batch2_budget_fraction * (T - t1) / K),
        )
        cap_w = max(log_T**cfg.gamma / cfg.alpha, N2 / (cfg.alpha * log_T))
        alloc = solve_allocation(est1, inst.arms, cfg, T, cap=cap_w)
        n = np.ceil(np.minimum(alloc.w * cfg.alpha * log_T, N2)).astype(int)
        prescription = {
            x: f2.get(x, 0) + int(n[x])
            for x in range(K)
            if f2.get(x, 0) + int(n[x]) > 0
        }
        counts2, data2, truncated = run.execute(prescription, sample=True)
        est2 = least_squares(data2, inst.arms)
        last_est = est2
        verdict = check_stopping_rule(
            est2, data2, inst.arms, T, threshold_scale=stopping_threshold_scale
        )
        if verdict.holds:
            active = [est2.best_hat]
        run.log_batch(counts2, est2, active, stop_verdict=verdict, data=data2)

    # Batches ell >= 3: phased elimination until decided or out of budget.
    ell = 2
    while run.t < T and len(active) > 1:
        ell += 1
        sub_design = frank_wolfe_design(inst.arms[active])
        T_ell = sched.rate(ell, T, d, K)
        f_ell = pull_counts(sub_design, T_ell, d)
        prescription = {active[i]: m for i, m in f_ell.items()}
        counts_l, data_l, truncated = run.execute(prescription, sample=True)
        if data_l is None:
            break
        est_l = least_squares(data_l, inst.arms)
        last_est = est_l
        if truncated:
            # The threshold is calibrated to the full rate; with the horizon
            # exhausted, record the estimate and stop without eliminating.
            run.log_batch(counts_l, est_l, active, data=data_l)
            break
        eps_l = math.sqrt(d * math.log(K * T * T) / T_ell)
        top = max(est_l.mu_hat[x] for x in active)
        active = [x for x in active if top - est_l.mu_hat[x] <= 2.0 * eps_l]
        run.log_batch(counts_l, est_l, active, data=data_l)

    star = _best_active(last_est, list(active))
    _exploit(run, star)
    return run.finish(star, started)


def run_phaelimd(
    inst: Instance, T: int, rng: np.random.Generator | None = None
) -> TrialResult:
    """Phased elimination with D-optimal exploration (baseline).

    Batch i explores the active set by a D-optimal design at rate
    T_i = T^(1 - 1/2^i), fits least squares on that batch, and eliminates
    every active arm whose estimated gap to the best active arm exceeds
    2 * eps_i with eps_i = sqrt(d * log(K T^2) / T_i).  Exploits once a
    single arm remains or the horizon ends.
    """
    started = time.perf_counter()
    T = int(T)
    if T < 16:
        raise ValueError(f"horizon must be at least 16, got {T}")
    if rng is None:
        rng = np.random.default_rng()
    d, K = inst.dim, inst.n_arms
    run = _Runner(inst, T, rng)
    active = list(range(K))
    last_est = None
    i = 0
    while run.t < T and len(active) > 1:
        i += 1
        T_i = T ** (1.0 - 0.5**i)
        sub_design = frank_wolfe_design(inst.arms[active])
        f_i = pull_counts(sub_design, T_i, d)
        prescription = {active[j]: m for j, m in f_i.items()}
        counts_i, data_i, truncated = run.execute(prescription, sample=True)
        if data_i is None:
            break
        est_i = least_squares(data_i, inst.arms)
        last_est = est_i
        if truncated:
            run.log_batch(counts_i, est_i, active, data=data_i)
            break
        eps_i = math.sqrt(d * math.log(K * T * T) / T_i)
        top = max(est_i.mu_hat[x] for x in active)
        active = [x for x in active if top - est_i.mu_hat[x] <= 2.0 * eps_i]
        run.log_batch(counts_i, est_i, active, data=data_i)

    star = active[0] if last_est is None else _best_active(last_est, list(active))
    _exploit(run, star)
    return run.finish(star, started)


def run_rs_oful(
    inst: Instance,
    T: int,
    C: float = 0.5,
    rng: np.random.Generator | None = None,
    *,
    ridge_lambda: float = 0.5,
    bonus_scale: float = 3.0,
) -> TrialResult:
    """Optimism with ridge regression and rare policy switches (baseline).

    Maintains the ridge estimate theta_hat = V^-1 b with V = lambda I +
    sum x_s x_s^T and picks x_t maximizing <x, theta_hat> + beta_t *
    ||x||_{V^-1}, where beta_t = sqrt(lambda) * S + bonus_scale *
    sqrt(2 log T + d log(1 + t L^2 / (lambda d))), S = max(1, ||theta*||),
    L = max arm norm.  The policy is recomputed only when det(V) has grown
    by a factor 1 + C since the last switch; with a fixed chosen arm the
    determinant growth is closed-form, so each batch plays the arm
    floor(C / s) + 1 times (s its leverage at the switch), truncated to the
    horizon.  Every policy segment is one batch.

    ``ridge_lambda`` and ``bonus_scale`` are calibrated so the switching
    frequency at benchmark horizons matches the standard behavior of the
    baseline (a unit ridge with unit bonus under-switches at T = 1e4).
    """
    started = time.perf_counter()
    T = int(T)
    if T < 1:
        raise ValueError(f"horizon must be at least 1, got {T}")
    if C <= 0:
        raise ValueError(f"switching parameter C must be positive, got {C}")
    if rng is None:
        rng = np.random.default_rng()
    d, K = inst.dim, inst.n_arms
    arms = inst.arms
    L2 = float(np.max(np.sum(arms * arms, axis=1)))
    S = max(1.0, float(np.linalg.norm(inst.theta_star)))
    lam = float(ridge_lambda)
    run = _Runner(inst, T, rng)

    V = lam * np.eye(d)
    b = np.zeros(d)
    while run.t < T:
        V_inv = np.linalg.inv(V)
        theta = V_inv @ b
        beta_t = math.sqrt(lam) * S + bonus_scale * math.sqrt(
            2.0 * math.log(T) + d * math.log(1.0 + run.t * L2 / (lam * d))
        )
        widths = np.sqrt(np.einsum("ij,jk,ik->i", arms, V_inv, arms))
        ucb = arms @ theta + beta_t * widths
        x = int(np.argmax(ucb))
        s = float(arms[x] @ V_inv @ arms[x])
        m = max(1, min(int(C / s) + 1 if s > 0 else T - run.t, T - run.t))
        executed, data, _ = run.execute({x: m}, sample=True)
        if data is None:
            break
        pulled = executed[x]
        V = V + pulled * np.outer(arms[x], arms[x])
        b = b + arms[x] * float(np.sum(data.rewards))
        mu_hat = arms @ theta
        seg_est = Estimate(
            theta_hat=theta,
            mu_hat=mu_hat,
            best_hat=int(np.argmax(mu_hat)),
            gaps_hat=np.max(mu_hat) - mu_hat,
        )
        run.log_batch(executed, seg_est, frozenset(range(K)))

    theta_final = np.linalg.solve(V, b)
    star = int(np.argmax(arms @ theta_final))
    return run.finish(star, started)
