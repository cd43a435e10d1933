"""Linear and one-hidden-layer ReLU predictors over flat parameter vectors.

A bias feature is appended to the input internally, so the flat vector covers
weights and biases uniformly (which keeps projection and regularization simple).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import DatasetView, SchemaError
from .problems import (ConstrainedProblem, UndefinedConstraintError,
                       check_simplex, constraint_margin_gradient,
                       objective_margin_gradient)


@dataclass(frozen=True)
class Architecture:
    kind: str            # "linear" | "mlp"
    input_dim: int
    hidden: int = 0

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown architecture {self.kind!r}")
        if self.kind == "mlp" and self.hidden < 1:
            raise ValueError("mlp needs at least one hidden unit")

    @property
    def param_count(self) -> int:
        d = self.input_dim + 1  # appended bias feature
        if self.kind == "linear":
            return d
        return self.hidden * d + self.hidden + 1  # W1, output weights, output bias


def _augment(features: np.ndarray) -> np.ndarray:
    return np.hstack([features, np.ones((features.shape[0], 1))])


def _unpack_mlp(arch: Architecture, theta: np.ndarray):
    d, h = arch.input_dim + 1, arch.hidden
    w1 = theta[:h * d].reshape(h, d)
    w2 = theta[h * d:h * d + h]
    b2 = theta[-1]
    return w1, w2, b2


def predict(arch: Architecture, theta: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Real-valued margins f(x; theta); classification is by sign."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arch.param_count,):
        raise SchemaError(f"theta has {theta.shape}, architecture needs "
                          f"({arch.param_count},)")
    if features.shape[1] != arch.input_dim:
        raise SchemaError(f"features have {features.shape[1]} columns, "
                          f"architecture expects {arch.input_dim}")
    xa = _augment(features)
    if arch.kind == "linear":
        return xa @ theta
    w1, w2, b2 = _unpack_mlp(arch, theta)
    hidden = np.maximum(0.0, xa @ w1.T)
    return hidden @ w2 + b2


def _backprop(arch: Architecture, theta: np.ndarray, features: np.ndarray,
              residual: np.ndarray) -> np.ndarray:
    """Gradient of sum_i residual_i * f(x_i; theta) w.r.t. theta."""
    xa = _augment(features)
    if arch.kind == "linear":
        return xa.T @ residual
    w1, w2, _ = _unpack_mlp(arch, theta)
    z1 = xa @ w1.T
    a1 = np.maximum(0.0, z1)
    dw2 = a1.T @ residual
    db2 = residual.sum()
    dz1 = (residual[:, None] * w2[None, :]) * (z1 > 0)
    dw1 = dz1.T @ xa
    return np.concatenate([dw1.ravel(), dw2, [db2]])


def weighted_subgradient(problem: ConstrainedProblem, arch: Architecture,
                         theta: np.ndarray, lam: np.ndarray, batch: DatasetView,
                         mu: float = 0.0, skip_undefined: bool = False) -> np.ndarray:
    """Subgradient of the lam-weighted hinge objective plus proxy constraints.

    mu > 0 adds the gradient of a (mu/2)||theta||^2 term folded into each loss.
    skip_undefined drops constraints whose denominator group is empty on this
    batch (used with minibatches; unbiased over full epochs).
    """
    lam = check_simplex(lam, problem.num_constraints + 1)
    margins = predict(arch, theta, batch.features)
    residual = lam[0] * objective_margin_gradient(margins, batch.labels)
    for weight, spec in zip(lam[1:], problem.constraints):
        if weight == 0.0:
            continue
        try:
            residual = residual + weight * constraint_margin_gradient(
                spec, margins, batch)
        except UndefinedConstraintError:
            if not skip_undefined:
                raise
    grad = _backprop(arch, theta, batch.features, residual)
    if mu > 0:
        grad = grad + mu * theta
    return grad


def lagrangian_subgradient(problem: ConstrainedProblem, arch: Architecture,
                           theta: np.ndarray, lam: np.ndarray, batch: DatasetView,
                           skip_undefined: bool = False) -> np.ndarray:
    """Subgradient of hinge objective + sum_i lam[i] * proxy_i; lam >= 0, length m."""
    margins = predict(arch, theta, batch.features)
    residual = objective_margin_gradient(margins, batch.labels)
    for weight, spec in zip(lam, problem.constraints):
        if weight == 0.0:
            continue
        try:
            residual = residual + weight * constraint_margin_gradient(
                spec, margins, batch)
        except UndefinedConstraintError:
            if not skip_undefined:
                raise
    return _backprop(arch, theta, batch.features, residual)


@dataclass
class AdamState:
    dim: int
    step_size: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.m is None:
            self.m = np.zeros(self.dim)
        if self.v is None:
            self.v = np.zeros(self.dim)


def adam_step(state: AdamState, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Standard bias-corrected update; mutates state, returns the new theta."""
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad ** 2
    mhat = state.m / (1 - state.beta1 ** state.t)
    vhat = state.v / (1 - state.beta2 ** state.t)
    return theta - state.step_size * mhat / (np.sqrt(vhat) + state.eps)


def project_theta(theta: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the 2-norm ball; identity for infinite radius."""
    if not np.isfinite(radius):
        return theta
    norm = float(np.linalg.norm(theta))
    # the small relative slack keeps the projection idempotent bit-for-bit:
    # rescaling can overshoot the radius by a few ulps
    if norm <= radius * (1.0 + 4.0 * np.finfo(float).eps):
        return theta
    return theta * (radius / norm)


def init_params(arch: Architecture, seed: int) -> np.ndarray:
    """Uniform in +/- 1/sqrt(fan_in), from a seeded generator."""
    rng = np.random.default_rng(seed)
    if arch.kind == "linear":
        scale = 1.0 / np.sqrt(arch.input_dim + 1)
        return rng.uniform(-scale, scale, arch.param_count)
    d = arch.input_dim + 1
    s1 = 1.0 / np.sqrt(d)
    s2 = 1.0 / np.sqrt(arch.hidden)
    w1 = rng.uniform(-s1, s1, arch.hidden * d)
    w2 = rng.uniform(-s2, s2, arch.hidden)
    b2 = rng.uniform(-s2, s2, 1)
    return np.concatenate([w1, w2, b2])


def save_checkpoint(arch: Architecture, theta: np.ndarray, path) -> None:
    """Plain-text architecture header followed by little-endian float64 parameters."""
    with open(path, "wb") as fh:
        if arch.kind == "linear":
            fh.write(f"linear {arch.input_dim}\n".encode())
        else:
            fh.write(f"mlp {arch.input_dim} {arch.hidden}\n".encode())
        fh.write(np.asarray(theta, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode().split()
        if header[0] == "linear":
            arch = Architecture("linear", int(header[1]))
        else:
            arch = Architecture("mlp", int(header[1]), int(header[2]))
        theta = np.frombuffer(fh.read(), dtype="<f8").copy()
    if theta.shape != (arch.param_count,):
        raise SchemaError("checkpoint parameter count does not match its header")
    return arch, theta
