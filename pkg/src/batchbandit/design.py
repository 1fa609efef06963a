"""D-optimal experimental design over a finite arm set.

The design problem picks a probability distribution pi over the arms that
minimizes the worst-case squared Mahalanobis norm

    g(pi) = max_x ||x||^2 inverse-weighted by H_pi,   H_pi = sum pi_x x x^T.

By the Kiefer-Wolfowitz equivalence theorem the optimum satisfies
g(pi*) = d (the dimension spanned by the arms), so g is both the objective
and its own optimality certificate.  The solver is Frank-Wolfe with exact
line search; :func:`pull_counts` converts a design into the integer pull
prescription ceil(2 pi_x g M / d) used by the batched algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["DesignWeights", "frank_wolfe_design", "pull_counts"]

# Weights at or below this value are treated as numerically zero when the
# support of a design is extracted.
_SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class DesignWeights:
    """A design over an active arm set.

    Attributes:
        support_arms: indices (into the active set) of arms with positive
            weight.
        probs: the matching weights; nonnegative, summing to one within 1e-9.
        g_value: worst-case squared Mahalanobis norm g(pi) of the design,
            measured over all active arms.
        converged: False when the iteration budget ran out before the
            optimality certificate g <= (1 + tol) * d_eff was reached; the
            stored design is then the best iterate seen.
    """

    support_arms: tuple[int, ...]
    probs: np.ndarray
    g_value: float
    converged: bool = True


def _leverages(X: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """||x||^2_{H^-1} for every row x of X, H = X^T diag(pi) X.

    Solves against a Cholesky factorization, adding a jitter of
    1e-12 * trace/d when the factorization fails on a near-singular H.
    """
    d = X.shape[1]
    H = X.T @ (X * pi[:, None])
    jitter = 1e-12 * float(np.trace(H)) / d
    for attempt in range(12):
        try:
            cho = scipy.linalg.cho_factor(H, lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            H = H + jitter * np.eye(d)
            jitter *= 10.0
    else:  # pragma: no cover - spanning inputs always factor after jitter
        raise np.linalg.LinAlgError("design Gram matrix could not be factored")
    sol = scipy.linalg.cho_solve(cho, X.T, check_finite=False)
    return np.einsum("ij,ji->i", X, sol)


def frank_wolfe_design(
    active_arms: np.ndarray | list,
    tol: float = 1e-3,
    max_iter: int = 10_000,
) -> DesignWeights:
    """Compute a near-optimal design via Frank-Wolfe.

    Starts from the uniform distribution; each step moves mass toward the arm
    with the largest leverage (ties broken by lowest index) using the exact
    line-search step (g/d - 1)/(g - 1).  Iteration stops once
    g <= (1 + tol) * d_eff, where d_eff is the dimension of the span of the
    arms; rank-deficient sets are handled by solving inside their span via an
    orthonormal basis.

    Returns the design with its certificate value g; when ``max_iter`` is
    exhausted first, the best iterate seen is returned with
    ``converged=False``.
    """
    arms = np.array(active_arms, dtype=float, ndmin=2)
    if arms.size == 0 or arms.shape[0] == 0:
        raise ValueError("active arm set must be nonempty")
    if tol <= 0:
        raise ValueError("tol must be positive")
    K = arms.shape[0]
    # Work inside the span of the arms so g is certified against d_eff.
    _, sv, Vt = np.linalg.svd(arms, full_matrices=False)
    if sv.size == 0 or sv[0] <= 0.0:
        raise ValueError("active arm set contains only zero vectors")
    d_eff = int(np.sum(sv > _SUPPORT_TOL * sv[0]))
    X = arms @ Vt[:d_eff].T

    pi = np.full(K, 1.0 / K)
    best_g = math.inf
    best_pi = pi.copy()
    converged = False
    for _ in range(max_iter):
        lev = _leverages(X, pi)
        k = int(np.argmax(lev))
        g = float(lev[k])
        if g < best_g:
            best_g = g
            best_pi = pi.copy()
        if g <= d_eff * (1.0 + tol):
            converged = True
            break
        step = (g / d_eff - 1.0) / (g - 1.0)
        pi = (1.0 - step) * pi
        pi[k] += step
    pi, g = best_pi, best_g

    support = np.nonzero(pi > _SUPPORT_TOL)[0]
    return DesignWeights(
        support_arms=tuple(int(i) for i in support),
        probs=pi[support].copy(),
        g_value=g,
        converged=converged,
    )


def pull_counts(design: DesignWeights, M: float, d: int) -> dict[int, int]:
    """Integer pulls per support arm: ceil(2 * pi_x * g * M / d).

    Arms outside the support receive no pulls and are omitted from the
    returned map.  ``d`` is the dimension used by the caller's exploration
    rate (the ambient dimension for the batched algorithms).
    """
    if M <= 0:
        raise ValueError("M must be positive")
    counts: dict[int, int] = {}
    for arm, p in zip(design.support_arms, design.probs):
        if p <= 0.0:
            continue
        counts[arm] = int(math.ceil(2.0 * float(p) * design.g_value * M / d))
    return counts
