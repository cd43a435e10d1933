"""Constraint-player machinery: stochastic-matrix fixed points, multiplicative
swap updates, projected ascent for the additive-penalty game, and swap-regret
measurement."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

_EXP_CLIP = 50.0


class StationaryDistributionError(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"power iteration did not converge, residual {residual:.3e}")
        self.residual = residual


def check_left_stochastic(matrix: np.ndarray, tol: float = 1e-12) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(matrix.sum(axis=0) - 1.0).max() > tol * matrix.shape[0]:
        raise ValueError("columns must sum to 1")
    if matrix.min() <= 0:
        raise ValueError("entries must be strictly positive")


def uniform_matrix(size: int) -> np.ndarray:
    return np.full((size, size), 1.0 / size)


def stationary_distribution(matrix: np.ndarray, tol: float = 1e-12,
                            max_iter: int = 100_000,
                            start: np.ndarray | None = None) -> np.ndarray:
    """Fixed point M v = v on the simplex, by power iteration.

    Strict positivity makes the fixed point unique. Falls back to a dense
    linear solve if iteration stalls.
    """
    check_left_stochastic(matrix)
    k = matrix.shape[0]
    v = np.full(k, 1.0 / k) if start is None else start / start.sum()
    for _ in range(max_iter):
        nxt = matrix @ v
        nxt /= nxt.sum()
        done = np.abs(nxt - v).sum() < tol
        v = nxt
        if done:
            break
    else:
        v = stationary_distribution_direct(matrix)
    residual = float(np.abs(matrix @ v - v).sum())
    if residual > 1e-10:
        raise StationaryDistributionError(residual)
    return v


def stationary_distribution_direct(matrix: np.ndarray) -> np.ndarray:
    """Dense solve of (M - I) v = 0, sum v = 1; the independent cross-check."""
    k = matrix.shape[0]
    a = np.vstack([matrix - np.eye(k), np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(a, b, rcond=None)
    v = np.maximum(v, 0.0)
    return v / v.sum()


def swap_update(matrix: np.ndarray, lam: np.ndarray, grad: np.ndarray,
                eta: float) -> np.ndarray:
    """Elementwise multiply by exp(eta * outer(grad, lam)), renormalize columns."""
    exponent = eta * np.outer(grad, lam)
    peak = np.abs(exponent).max()
    if peak > _EXP_CLIP:
        log.warning("clipping swap-update exponents (max magnitude %.1f)", peak)
        exponent = np.clip(exponent, -_EXP_CLIP, _EXP_CLIP)
    updated = matrix * np.exp(exponent)
    return updated / updated.sum(axis=0, keepdims=True)


def project_l1_ball_nonneg(v: np.ndarray, radius: float) -> np.ndarray:
    """Project onto {x >= 0, sum x <= radius}: clip negatives, then shift onto
    the scaled simplex face if the 1-norm still exceeds the radius."""
    v = np.maximum(v, 0.0)
    total = v.sum()
    if total <= radius:
        return v
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def projected_ascent_update(lam: np.ndarray, grad: np.ndarray, eta: float,
                            radius: float) -> np.ndarray:
    return project_l1_ball_nonneg(lam + eta * grad, radius)


def measure_swap_regret(lams: np.ndarray, payoffs: np.ndarray) -> float:
    """Swap regret of a play sequence against per-coordinate payoff vectors.

    sum_i max_j avg_t lam_i(t) g_j(t) - avg_t <lam(t), g(t)>; the maximization
    over left-stochastic remappings separates per column into an argmax.
    """
    lams = np.asarray(lams, dtype=float)
    payoffs = np.asarray(payoffs, dtype=float)
    if lams.shape != payoffs.shape:
        raise ValueError("play and payoff sequences must have the same shape")
    t = lams.shape[0]
    cross = lams.T @ payoffs / t          # cross[i, j] = avg_t lam_i g_j
    realized = float(np.sum(lams * payoffs) / t)
    return float(cross.max(axis=1).sum() - realized)


def theory_swap_step_size(num_coords: int, horizon: int, grad_bound: float) -> float:
    """Step size sqrt(k ln k / (T B^2)) matching the sublinear-regret guarantee."""
    return float(np.sqrt(num_coords * np.log(num_coords) /
                         (horizon * grad_bound ** 2)))


def swap_regret_bound(num_coords: int, horizon: int, grad_bound: float) -> float:
    """2 B sqrt(k ln k / T), the guaranteed average swap regret at the theory step."""
    return float(2.0 * grad_bound * np.sqrt(num_coords * np.log(num_coords) / horizon))
