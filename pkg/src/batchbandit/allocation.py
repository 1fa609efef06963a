"""Optimal pull-weight allocation for gap-driven exploration.

Given an estimated (or exact) gap for every suboptimal arm, the allocation
program finds nonnegative pull weights w minimizing

    sum_{x != best} w_x * coeff_x

subject to one constraint per suboptimal arm,

    ||x - best||^2_{H(w)^-1} <= coeff_x^2 / 2,      H(w) = sum w_y y y^T,

with the best arm's weight pinned at a cap.  Small weights leave the
difference directions poorly covered, so each constraint lower-bounds the
evidence the resulting batch will carry against arm x.  The solver is
projected gradient descent on a log-barrier relaxation followed by an exact
feasibility restoration: the smallest uniform up-scaling of the suboptimal
weights that satisfies every constraint (growing weights never breaks a
satisfied constraint).

Constraint evaluation is span-aware: directions outside the span of the
weighted arms evaluate to +inf rather than to the silently projected finite
value a pseudo-inverse would report.  Without this, near-boundary iterates
with collapsed weights can masquerade as feasible.

The same program with exact gaps, no slack subtraction, and an effectively
unbounded best-arm weight is the asymptotic oracle; its objective value is
the instance's constant :func:`c_star`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import GapProfile, Instance, compute_gaps
from .estimator import Estimate

__all__ = [
    "Allocation",
    "AllocConfig",
    "make_alloc_config",
    "solve_allocation",
    "solve_oracle_allocation",
    "c_star",
    "ORACLE_CAP",
]

# Best-arm weight used to realize "unbounded" in the oracle program; beyond
# this the constraints' dependence on the best-arm weight is numerically nil.
ORACLE_CAP = 1e8

_SPAN_TOL = 1e-12


@dataclass(frozen=True)
class Allocation:
    """Solution of the allocation program.

    Attributes:
        w: (K,) nonnegative pull weights; ``w[best]`` equals the applied cap.
        objective: sum over suboptimal arms of w_x * coeff_x.
        feasible: True when every constraint verifies post hoc.
        cap_value: the best-arm weight cap actually applied.
        converged: False when the inner optimization exhausted its budget;
            the returned point is then the best feasible scaled solution.
    """

    w: np.ndarray
    objective: float
    feasible: bool
    cap_value: float
    converged: bool = True


@dataclass(frozen=True)
class AllocConfig:
    """Horizon-derived constants of the finite-horizon allocation program.

    Attributes:
        epsilon: slack subtracted from estimated gaps (1 / log log T).
        alpha: inflation factor (1 + 1/log log T)(1 + d log log T / log T).
        gamma: exponent of the best-arm weight cap (log T)^gamma / alpha.
        gap_floor_fraction: floor applied to the gap coefficients; see
            :func:`solve_allocation`.
    """

    epsilon: float
    alpha: float
    gamma: float = 0.9
    gap_floor_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.alpha <= 1:
            raise ValueError("alpha must exceed 1")
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if not (0.0 < self.gap_floor_fraction <= 1.0):
            raise ValueError("gap_floor_fraction must lie in (0, 1]")


def make_alloc_config(
    d: int,
    T: float,
    gamma: float = 0.9,
    gap_floor_fraction: float = 0.5,
) -> AllocConfig:
    """Build the allocation constants for dimension d and horizon T."""
    log_T = math.log(T)
    if log_T <= 0 or math.log(log_T) <= 0:
        raise ValueError(f"horizon T={T} too small: log log T must be positive")
    llT = math.log(log_T)
    return AllocConfig(
        epsilon=1.0 / llT,
        alpha=(1.0 + 1.0 / llT) * (1.0 + d * llT / log_T),
        gamma=gamma,
        gap_floor_fraction=gap_floor_fraction,
    )


def _constraint_values(
    A: np.ndarray,
    best_arm: np.ndarray,
    directions: np.ndarray,
    u: np.ndarray,
    cap: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Quadratics ||v||^2_{H(u)^-1} per direction, +inf off the span of H.

    Returns the constraint values and the span-restricted inverse of H.
    """
    H = cap * np.outer(best_arm, best_arm) + A.T @ (A * u[:, None])
    vals, vecs = np.linalg.eigh(H)
    cut = max(_SPAN_TOL * max(float(vals[-1]), 0.0), 1e-300)
    mask = vals > cut
    H_inv = (vecs[:, mask] / vals[mask]) @ vecs[:, mask].T
    q = np.empty(directions.shape[0])
    for i, v in enumerate(directions):
        coef = vecs.T @ v
        off_span = float(np.sum(coef[~mask] ** 2))
        if off_span > 1e-10 * max(1.0, float(v @ v)):
            q[i] = math.inf
        else:
            q[i] = float(v @ H_inv @ v)
    return q, H_inv


def _solve_program(
    arms: np.ndarray,
    best: int,
    coeffs: np.ndarray,
    cap: float,
    outer_rounds: int = 12,
    inner_max: int = 10_000,
    inner_tol: float = 1e-6,
) -> Allocation:
    """Minimize sum w_x coeff_x subject to the evidence constraints.

    ``coeffs`` holds one positive coefficient per arm (the best arm's entry
    is ignored); the constraint for arm x reads
    ||x - best||^2_{H(w)^-1} <= coeffs[x]^2 / 2 with w[best] = cap.
    """
    K = arms.shape[0]
    sub = [i for i in range(K) if i != best]
    A = arms[sub]
    directions = A - arms[best]
    c = coeffs[sub]
    r = c**2 / 2.0
    m = len(sub)
    b = arms[best]

    def q_of(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _constraint_values(A, b, directions, u, cap)

    def pack(u: np.ndarray, feasible: bool, converged: bool) -> Allocation:
        w = np.zeros(K)
        w[best] = cap
        w[np.array(sub)] = u
        w.setflags(write=False)
        return Allocation(
            w=w,
            objective=float(np.dot(c, u)),
            feasible=feasible,
            cap_value=cap,
            converged=converged,
        )

    # Start from the decoupled closed form w_x = 2 / coeff_x^2 (exact for
    # orthogonal arms) and scale up until strictly feasible.
    u = 2.0 / c**2
    feasible_start = False
    for _ in range(60):
        q, _ = q_of(u)
        if np.all(q <= 0.9 * r):
            feasible_start = True
            break
        u *= 2.0
    if not feasible_start:
        return pack(u, feasible=False, converged=False)

    converged = True
    barrier = float(np.dot(c, u)) / (2 * m)
    for _ in range(outer_rounds):
        eta = 1.0
        inner_converged = False
        for _ in range(inner_max):
            q, H_inv = q_of(u)
            slack = r - q
            # d q_x / d u_y = -(a_y^T H^-1 v_x)^2, so the barrier gradient is
            # the objective coefficient minus the weighted constraint pushes.
            AHV = A @ H_inv @ directions.T
            grad = c - barrier * (AHV**2) @ (1.0 / slack)
            moved = False
            for _ in range(50):
                u_new = np.maximum(u - eta * grad, 0.0)
                q_new, _ = q_of(u_new)
                if np.all(q_new < r):
                    phi_old = float(np.dot(c, u)) - barrier * float(
                        np.sum(np.log(slack))
                    )
                    phi_new = float(np.dot(c, u_new)) - barrier * float(
                        np.sum(np.log(r - q_new))
                    )
                    if phi_new < phi_old:
                        moved = True
                        break
                eta *= 0.5
            if not moved:
                inner_converged = True
                break
            rel_step = np.linalg.norm(u_new - u) / max(1.0, float(np.linalg.norm(u)))
            u = u_new
            eta = min(eta * 2.0, 1e4)
            if rel_step < inner_tol:
                inner_converged = True
                break
        if not inner_converged:
            converged = False
        barrier *= 0.5

    # Exact feasibility restoration: the smallest uniform up-scaling of the
    # suboptimal weights satisfying every constraint.
    lo, hi = 1.0, 1.0
    q, _ = q_of(u)
    attempts = 0
    while np.any(q > r) and attempts < 60:
        hi *= 2.0
        q, _ = q_of(hi * u)
        attempts += 1
    if np.any(q > r):
        return pack(hi * u, feasible=False, converged=False)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        q, _ = q_of(mid * u)
        if np.all(q <= r):
            hi = mid
        else:
            lo = mid
    return pack(hi * u, feasible=True, converged=converged)


def solve_allocation(
    est: Estimate,
    arms: np.ndarray,
    cfg: AllocConfig,
    T: float,
    cap: float | None = None,
) -> Allocation:
    """Solve the finite-horizon allocation from an estimated gap profile.

    The coefficient for arm x is max(gap_x - 4 epsilon,
    gap_floor_fraction * gap_x): the raw slack-subtracted coefficient is
    negative at benchmark horizons (4 epsilon exceeds every gap), which
    would make the program unbounded, so the floor keeps a positive fraction
    of each estimated gap while leaving the asymptotic program unchanged
    (the floor is inactive once 4 epsilon is small).

    The best arm's weight is pinned at ``cap`` (default
    (log T)^gamma / alpha).  Raises when every estimated gap is zero.
    """
    arms = np.asarray(arms, dtype=float)
    gaps = np.asarray(est.gaps_hat, dtype=float)
    best = est.best_hat
    others = np.array([i for i in range(arms.shape[0]) if i != best])
    if np.all(gaps[others] == 0.0):
        raise ValueError("degenerate estimate: every suboptimal gap is zero")
    if cap is None:
        cap = math.log(T) ** cfg.gamma / cfg.alpha
    coeffs = np.maximum(gaps - 4.0 * cfg.epsilon, cfg.gap_floor_fraction * gaps)
    coeffs[best] = 1.0  # unused
    return _solve_program(arms, best, coeffs, cap)


def solve_oracle_allocation(gaps: GapProfile, arms: np.ndarray) -> Allocation:
    """Solve the asymptotic program: exact gaps, no slack, unbounded best arm."""
    arms = np.asarray(arms, dtype=float)
    coeffs = np.asarray(gaps.gaps, dtype=float).copy()
    coeffs[gaps.best_index] = 1.0  # unused
    return _solve_program(arms, gaps.best_index, coeffs, ORACLE_CAP)


def c_star(inst: Instance) -> float:
    """Instance complexity: objective value of the oracle allocation."""
    return solve_oracle_allocation(compute_gaps(inst), inst.arms).objective
