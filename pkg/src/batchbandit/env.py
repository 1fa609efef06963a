"""Bandit environments: problem instances, benchmark families, reward sampling.

An instance is a finite set of feature vectors (arms) together with a hidden
weight vector; pulling an arm yields its inner product with the weights plus
Gaussian noise.  This module provides the instance container, the two
benchmark families used by the harness (the "end of optimism" geometry and
coordinate-wise uniform random instances), gap computation, and a
line-oriented text format for saving instances to disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Instance",
    "GapProfile",
    "make_end_of_optimism",
    "make_random_instance",
    "sample_reward",
    "compute_gaps",
    "save_instance",
    "load_instance",
]

# Singular values below this fraction of the largest are treated as zero when
# checking that the arm set spans its ambient space.
_RANK_TOL = 1e-10

_MAX_RESAMPLE_ATTEMPTS = 100


@dataclass(frozen=True)
class Instance:
    """A linear-bandit problem: arm features, hidden weights, noise level.

    Attributes:
        arms: (K, d) matrix, one arm feature vector per row.
        theta_star: (d,) hidden weight vector.
        noise_std: standard deviation of the Gaussian reward noise.
        label: human-readable identifier.
        reward_bound: max over arms of |<arm, theta_star>|, recorded at
            construction (bounded expected rewards).
    """

    arms: np.ndarray
    theta_star: np.ndarray
    noise_std: float = 1.0
    label: str = ""
    reward_bound: float = field(init=False)

    def __post_init__(self) -> None:
        arms = np.array(self.arms, dtype=float, ndmin=2)
        theta = np.array(self.theta_star, dtype=float).ravel()
        if arms.ndim != 2:
            raise ValueError("arms must be a K x d matrix")
        K, d = arms.shape
        if K < 2:
            raise ValueError(f"need at least 2 arms, got {K}")
        if d < 1:
            raise ValueError("arm dimension must be >= 1")
        if theta.shape != (d,):
            raise ValueError(
                f"theta_star has shape {theta.shape}, expected ({d},)"
            )
        if not (np.isfinite(arms).all() and np.isfinite(theta).all()):
            raise ValueError("arms and theta_star must be finite")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        sv = np.linalg.svd(arms, compute_uv=False)
        if sv[0] <= 0 or np.sum(sv > _RANK_TOL * sv[0]) < d:
            raise ValueError("arms must span their ambient space (rank d)")
        means = arms @ theta
        top = means.max()
        if int(np.sum(means == top)) != 1:
            raise ValueError("best arm must be unique (tie at maximum mean)")
        arms.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "reward_bound", float(np.max(np.abs(means))))

    @property
    def n_arms(self) -> int:
        return self.arms.shape[0]

    @property
    def dim(self) -> int:
        return self.arms.shape[1]

    def means(self) -> np.ndarray:
        """Expected reward of every arm."""
        return self.arms @ self.theta_star


@dataclass(frozen=True)
class GapProfile:
    """Exact suboptimality gaps of an instance.

    Attributes:
        gaps: (K,) vector; entry i is <best arm - arm i, theta_star>.
        best_index: index of the unique best arm (gap zero).
        delta_min: smallest positive gap.
    """

    gaps: np.ndarray
    best_index: int
    delta_min: float


def make_end_of_optimism(d: int, epsilon: float) -> Instance:
    """Build the hard instance family where optimism keeps paying a toll.

    The arm set is the d standard basis vectors plus, for each j >= 2, the
    vector (1 - epsilon) e_1 + 2 epsilon e_j, giving K = 2d - 1 arms.  The
    hidden weights are e_1, so the near-clones of the best arm have gap
    epsilon while the remaining basis vectors have gap 1.

    Args:
        d: ambient dimension, at least 2.
        epsilon: gap of the near-clone arms, in the open interval (0, 0.5).
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not (0.0 < epsilon < 0.5):
        raise ValueError(f"epsilon must lie in (0, 0.5), got {epsilon}")
    eye = np.eye(d)
    rows = [eye[i] for i in range(d)]
    for j in range(1, d):
        rows.append((1.0 - epsilon) * eye[0] + 2.0 * epsilon * eye[j])
    return Instance(
        arms=np.array(rows),
        theta_star=eye[0].copy(),
        noise_std=1.0,
        label=f"endoa:d={d},eps={epsilon:g}",
    )


def make_random_instance(d: int, K: int, seed: int) -> Instance:
    """Sample a random instance: uniform arms, unit-sphere weights.

    Each arm is drawn coordinate-wise uniform on [0, 1]; theta_star is drawn
    uniform on the unit sphere.  The draw is rejected and repeated (up to a
    bounded number of attempts) until the arm matrix has full rank and the
    best arm is unique, so accepted instances are exactly as drawn.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if K < d:
        raise ValueError(f"need K >= d, got K={K}, d={d}")
    rng = np.random.default_rng(seed)
    label = f"random:d={d},k={K},seed={seed}"
    for _ in range(_MAX_RESAMPLE_ATTEMPTS):
        arms = rng.uniform(0.0, 1.0, size=(K, d))
        z = rng.standard_normal(d)
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            continue
        theta = z / norm
        try:
            return Instance(arms=arms, theta_star=theta, noise_std=1.0, label=label)
        except ValueError:
            continue
    raise ValueError(
        f"could not sample a valid instance for d={d}, K={K} after "
        f"{_MAX_RESAMPLE_ATTEMPTS} attempts"
    )


def sample_reward(inst: Instance, arm_index: int, rng: np.random.Generator) -> float:
    """Draw one noisy reward for the given arm.

    Returns <arm, theta_star> + noise_std * z with z a standard normal draw;
    deterministic given the generator state.
    """
    if not (0 <= arm_index < inst.n_arms):
        raise IndexError(
            f"arm index {arm_index} out of range for {inst.n_arms} arms"
        )
    mean = float(inst.arms[arm_index] @ inst.theta_star)
    return mean + inst.noise_std * float(rng.standard_normal())


def compute_gaps(inst: Instance) -> GapProfile:
    """Exact gaps from the hidden weights; errors on a tied maximum."""
    means = inst.means()
    top = float(means.max())
    if int(np.sum(means == top)) != 1:
        raise ValueError("best arm must be unique (tie at maximum mean)")
    best = int(np.argmax(means))
    gaps = top - means
    gaps[best] = 0.0
    positive = gaps[gaps > 0]
    if positive.size == 0:
        raise ValueError("instance has no suboptimal arm")
    return GapProfile(gaps=gaps, best_index=best, delta_min=float(positive.min()))


def save_instance(inst: Instance, path: str | Path) -> Path:
    """Write an instance in the line-oriented text format.

    Line 1 holds ``d K noise_std``; line 2 the weight vector; the next K
    lines one arm each.  Lines starting with ``#`` are comments; the label is
    stored as a leading ``# label:`` comment so a round trip preserves it.
    """
    path = Path(path)
    lines = []
    if inst.label:
        lines.append(f"# label: {inst.label}")
    lines.append(f"{inst.dim} {inst.n_arms} {inst.noise_std!r}")
    lines.append(" ".join(repr(float(v)) for v in inst.theta_star))
    for row in inst.arms:
        lines.append(" ".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_instance(path: str | Path) -> Instance:
    """Read an instance written by :func:`save_instance`.

    Raises ValueError on malformed files and propagates the instance
    invariant checks (at least two arms, spanning arm set, unique best arm).
    """
    path = Path(path)
    label = ""
    rows: list[list[float]] = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line.lstrip("#").strip()
            if comment.startswith("label:"):
                label = comment[len("label:"):].strip()
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise ValueError(f"malformed instance file {path}: {exc}") from exc
    if len(rows) < 2:
        raise ValueError(f"malformed instance file {path}: too few lines")
    header = rows[0]
    if len(header) != 3:
        raise ValueError(
            f"malformed instance file {path}: header must be 'd K noise_std'"
        )
    d, K = int(header[0]), int(header[1])
    noise_std = float(header[2])
    if d < 1 or float(d) != header[0] or float(K) != header[1]:
        raise ValueError(f"malformed instance file {path}: bad header values")
    if len(rows) != 2 + K:
        raise ValueError(
            f"malformed instance file {path}: expected {K} arm lines, "
            f"found {len(rows) - 2}"
        )
    theta = rows[1]
    if len(theta) != d:
        raise ValueError(
            f"malformed instance file {path}: weight vector must have {d} entries"
        )
    arms = rows[2:]
    if any(len(r) != d for r in arms):
        raise ValueError(
            f"malformed instance file {path}: every arm must have {d} entries"
        )
    return Instance(
        arms=np.array(arms, dtype=float),
        theta_star=np.array(theta, dtype=float),
        noise_std=noise_std,
        label=label,
    )


def _mean_gap_bruteforce(inst: Instance) -> np.ndarray:
    """Reference gap computation by direct per-arm loops (test oracle)."""
    means = [float(inst.arms[i] @ inst.theta_star) for i in range(inst.n_arms)]
    top = max(means)
    return np.array([top - m for m in means])
