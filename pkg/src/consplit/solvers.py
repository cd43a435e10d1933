"""The four training loops and the trace bookkeeping they share.

All four pit an objective player (parameters theta, trained on one dataset)
against a constraint player (multipliers, updated from a second dataset):

  discrete              covering of the simplex + a cached deterministic
                        minimization oracle + multiplicative swap updates
  continuous            outer swap updates, inner decaying-step SGD on a
                        strongly convex weighted loss, averaged inner iterates
  practical             simultaneous ADAM on theta and swap updates on the
                        multiplier matrix, minibatched
  lagrangian_practical  ADAM on theta against an additive-penalty loss,
                        projected gradient ascent on nonnegative multipliers

In two-dataset mode the constraint player measures violations on a validation
split the objective player never trains on; in one-dataset mode both views are
the same data.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .covering import build_covering, nearest_center
from .datasets import DatasetView
from .dynamics import (projected_ascent_update, stationary_distribution,
                       swap_update, theory_swap_step_size, uniform_matrix)
from .models import (AdamState, Architecture, adam_step, lagrangian_subgradient,
                     predict, project_theta, weighted_subgradient)
from .problems import (ConstrainedProblem, UndefinedConstraintError,
                       constraint_value, eval_game_objective_side,
                       eval_objective, lambda_gradient)
from .shrinking import StochasticClassifier

log = logging.getLogger(__name__)

ALGORITHMS = ("discrete", "continuous", "practical", "lagrangian_practical")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "practical"
    steps: int = 1000               # outer iterations T
    inner_steps: int = 100          # T_theta, continuous only
    eta_theta: float = 0.001        # ADAM step size (practical algorithms, oracle)
    eta_lambda: float | None = None  # None: theory step (swap) or 0.1 (ascent)
    covering_radius: float = 0.5    # discrete only
    oracle_tol: float = 1e-4        # loss tolerance the oracle aims for
    mu: float = 0.0                 # strong-convexity weight (continuous)
    theta_radius: float = math.inf  # 2-norm cap on parameters
    multiplier_radius: float | None = None  # 1-norm cap on lagrangian multipliers
    payoff_bound: float = 1.0       # B in the theory step size
    batch_size: int = 64
    seed: int = 0
    dataset_mode: str = "two_dataset"
    subsample: int = 100

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.steps < 1 or self.inner_steps < 1 or self.batch_size < 1 \
                or self.subsample < 1:
            raise ValueError("counts and step budgets must be positive")
        if self.dataset_mode not in ("two_dataset", "one_dataset"):
            raise ValueError(f"unknown dataset mode {self.dataset_mode!r}")
        if self.algorithm == "continuous" and not (
                self.mu > 0 and math.isfinite(self.theta_radius)):
            raise ValueError("continuous mode needs mu > 0 and a finite theta radius")


@dataclass
class IterateTrace:
    """Subsampled parameter snapshots plus full multiplier/payoff history."""

    algorithm: str
    indices: np.ndarray           # (S,) iterates kept, always includes 0 and T-1
    thetas: np.ndarray            # (S, dim)
    lam1: np.ndarray              # (S,) objective weight; all ones for lagrangian
    train_objectives: np.ndarray  # (S,) 0/1 error on the training split
    train_violations: np.ndarray  # (S, m) true constraint values, training split
    val_violations: np.ndarray    # (S, m) true constraint values, validation split
    lams: np.ndarray              # (T, m+1) or (T, m) full multiplier history
    payoffs: np.ndarray           # (T, same) constraint-player gradient history

    def __post_init__(self):
        s = len(self.indices)
        if not (len(self.thetas) == len(self.lam1) == len(self.train_objectives)
                == len(self.train_violations) == len(self.val_violations) == s):
            raise ValueError("trace arrays disagree on the number of snapshots")
        if self.lams.shape != self.payoffs.shape:
            raise ValueError("multiplier and payoff histories disagree")


def subsample_indices(total: int, count: int) -> np.ndarray:
    """Up to `count` evenly spaced indices into range(total), endpoints included."""
    if total <= count:
        return np.arange(total)
    return np.unique(np.round(np.linspace(0, total - 1, count)).astype(int))


def _eta_swap(config: SolverConfig, m: int) -> float:
    if config.eta_lambda is not None:
        return config.eta_lambda
    return theory_swap_step_size(m + 1, config.steps, config.payoff_bound)


def _safe_constraints(problem: ConstrainedProblem, margins: np.ndarray,
                      data: DatasetView) -> np.ndarray:
    """True constraint values, with empty-group constraints reported as 0."""
    out = np.zeros(problem.num_constraints)
    for i, spec in enumerate(problem.constraints):
        try:
            out[i] = constraint_value(spec, margins, data, surrogate=False)
        except UndefinedConstraintError:
            log.debug("constraint %d undefined on this batch; using 0", i)
    return out


def _safe_lambda_gradient(problem, margins, data) -> np.ndarray:
    return np.concatenate(([0.0], _safe_constraints(problem, margins, data)))


class _Recorder:
    """Collects theta snapshots and their metrics at preselected iterations."""

    def __init__(self, problem, arch, train, val, total, count):
        self.problem, self.arch = problem, arch
        self.train, self.val = train, val
        self.indices = subsample_indices(total, count)
        self._keep = set(self.indices.tolist())
        self.thetas, self.lam1 = [], []
        self.train_obj, self.train_vio, self.val_vio = [], [], []

    def offer(self, t: int, theta: np.ndarray, lam1: float,
              val_constraints: np.ndarray | None = None) -> None:
        if t not in self._keep:
            return
        train_margins = predict(self.arch, theta, self.train.features)
        self.thetas.append(theta.copy())
        self.lam1.append(lam1)
        self.train_obj.append(eval_objective(self.problem, train_margins,
                                             self.train, surrogate=False))
        self.train_vio.append(_safe_constraints(self.problem, train_margins,
                                                self.train))
        if val_constraints is None:
            val_margins = predict(self.arch, theta, self.val.features)
            val_constraints = _safe_constraints(self.problem, val_margins, self.val)
        self.val_vio.append(np.asarray(val_constraints, dtype=float))

    def finish(self, algorithm, lams, payoffs) -> IterateTrace:
        return IterateTrace(algorithm, self.indices,
                            np.array(self.thetas), np.array(self.lam1),
                            np.array(self.train_obj), np.array(self.train_vio),
                            np.array(self.val_vio), np.asarray(lams, dtype=float),
                            np.asarray(payoffs, dtype=float))


def descend(loss_grad, dim: int, tolerance: float, step_size: float = 0.01,
            max_steps: int = 10_000, patience: int = 20,
            radius: float = math.inf) -> np.ndarray:
    """Deterministic full-batch descent from zero; returns the best iterate.

    loss_grad(theta) -> (loss, gradient). Stops once the best loss seen has not
    improved by at least tolerance / 10 over `patience` consecutive steps, or
    when the budget runs out.
    """
    theta = np.zeros(dim)
    adam = AdamState(dim, step_size=step_size)
    loss, grad = loss_grad(theta)
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite loss at the starting point")
    best_loss, best_theta = loss, theta
    stalled = 0
    for _ in range(max_steps):
        theta = project_theta(adam_step(adam, theta, grad), radius)
        loss, grad = loss_grad(theta)
        if not np.isfinite(loss):
            raise FloatingPointError("loss became non-finite during descent")
        if loss < best_loss - tolerance / 10.0:
            best_loss, best_theta = loss, theta
            stalled = 0
        else:
            if loss < best_loss:
                best_loss, best_theta = loss, theta
            stalled += 1
            if stalled >= patience:
                break
    return best_theta


def oracle_minimize(problem: ConstrainedProblem, arch: Architecture,
                    lam: np.ndarray, train: DatasetView,
                    tolerance: float, step_size: float = 0.01,
                    mu: float = 0.0, radius: float = math.inf,
                    cache: dict | None = None) -> np.ndarray:
    """Deterministic approximate minimizer of the lam-weighted training loss.

    Results are cached by lam rounded to 12 decimals, so repeated calls with
    the same multipliers return the identical parameter vector.
    """
    key = tuple(np.round(np.asarray(lam, dtype=float), 12))
    if cache is not None and key in cache:
        return cache[key]

    def loss_grad(theta):
        margins = predict(arch, theta, train.features)
        loss = eval_game_objective_side(problem, margins, np.array(key), train)
        grad = weighted_subgradient(problem, arch, theta, np.array(key), train, mu=mu)
        if mu > 0:
            loss += 0.5 * mu * float(theta @ theta)
        return loss, grad

    theta = descend(loss_grad, arch.param_count, tolerance, step_size,
                    radius=radius)
    if cache is not None:
        cache[key] = theta
    return theta


def run_discrete(problem: ConstrainedProblem, arch: Architecture,
                 train: DatasetView, val: DatasetView,
                 config: SolverConfig) -> IterateTrace:
    m = problem.num_constraints
    covering = build_covering(m, config.covering_radius)
    eta = _eta_swap(config, m)
    matrix = uniform_matrix(m + 1)
    cache: dict = {}
    rec = _Recorder(problem, arch, train, val, config.steps, config.subsample)
    lams, payoffs = [], []
    for t in range(config.steps):
        lam = stationary_distribution(matrix)
        _, center = nearest_center(covering, lam)
        theta = oracle_minimize(problem, arch, center, train, config.oracle_tol,
                                config.eta_theta, config.mu, config.theta_radius,
                                cache)
        val_margins = predict(arch, theta, val.features)
        payoff = lambda_gradient(problem, val_margins, val)
        rec.offer(t, theta, lam[0], payoff[1:])
        lams.append(lam)
        payoffs.append(payoff)
        matrix = swap_update(matrix, lam, payoff, eta)
    return rec.finish("discrete", lams, payoffs)


def inner_strongly_convex_sgd(grad, dim: int, mu: float, steps: int,
                              radius: float) -> np.ndarray:
    """Averaged decaying-step projected SGD from zero; step 1/(mu s) at step s.

    grad(theta, s) -> stochastic subgradient. Returns the average of the
    visited iterates, whose suboptimality on a mu-strongly convex loss is at
    most B^2 (1 + ln T) / (2 mu T) for gradient bound B.
    """
    theta = np.zeros(dim)
    total = np.zeros(dim)
    for s in range(1, steps + 1):
        total += theta
        theta = project_theta(theta - grad(theta, s) / (mu * s), radius)
    return total / steps


def run_continuous(problem: ConstrainedProblem, arch: Architecture,
                   train: DatasetView, val: DatasetView,
                   config: SolverConfig) -> IterateTrace:
    m = problem.num_constraints
    eta = _eta_swap(config, m)
    matrix = uniform_matrix(m + 1)
    rec = _Recorder(problem, arch, train, val, config.steps, config.subsample)
    lams, payoffs = [], []
    for t in range(config.steps):
        lam = stationary_distribution(matrix)

        def full_grad(theta, _s, lam=lam):
            return weighted_subgradient(problem, arch, theta, lam, train,
                                        mu=config.mu)

        theta = inner_strongly_convex_sgd(full_grad, arch.param_count, config.mu,
                                          config.inner_steps, config.theta_radius)
        val_margins = predict(arch, theta, val.features)
        payoff = lambda_gradient(problem, val_margins, val)
        rec.offer(t, theta, lam[0], payoff[1:])
        lams.append(lam)
        payoffs.append(payoff)
        matrix = swap_update(matrix, lam, payoff, eta)
    return rec.finish("continuous", lams, payoffs)


def _batch_stream(n: int, batch_size: int, seed_seq: np.random.SeedSequence):
    """Epoch-shuffled minibatch index stream."""
    rng = np.random.default_rng(seed_seq)
    while True:
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield order[start:start + batch_size]


def run_practical(problem: ConstrainedProblem, arch: Architecture,
                  train: DatasetView, val: DatasetView,
                  config: SolverConfig) -> IterateTrace:
    m = problem.num_constraints
    eta = config.eta_lambda if config.eta_lambda is not None else 0.1
    matrix = uniform_matrix(m + 1)
    theta = np.zeros(arch.param_count)
    adam = AdamState(arch.param_count, step_size=config.eta_theta)
    train_seed, val_seed = np.random.SeedSequence(config.seed).spawn(2)
    train_batches = _batch_stream(train.n, config.batch_size, train_seed)
    val_batches = _batch_stream(val.n, config.batch_size, val_seed)
    rec = _Recorder(problem, arch, train, val, config.steps, config.subsample)
    lams, payoffs = [], []
    for t in range(config.steps):
        lam = stationary_distribution(matrix)
        rec.offer(t, theta, lam[0])
        tb = train.subset(next(train_batches))
        grad = weighted_subgradient(problem, arch, theta, lam, tb,
                                    skip_undefined=True)
        theta = project_theta(adam_step(adam, theta, grad), config.theta_radius)
        vb = val.subset(next(val_batches))
        payoff = _safe_lambda_gradient(problem, predict(arch, theta, vb.features), vb)
        lams.append(lam)
        payoffs.append(payoff)
        matrix = swap_update(matrix, lam, payoff, eta)
    return rec.finish("practical", lams, payoffs)


def run_lagrangian_practical(problem: ConstrainedProblem, arch: Architecture,
                             train: DatasetView, val: DatasetView,
                             config: SolverConfig) -> IterateTrace:
    m = problem.num_constraints
    eta = config.eta_lambda if config.eta_lambda is not None else 0.1
    radius = config.multiplier_radius if config.multiplier_radius is not None \
        else 10.0 * m
    theta = np.zeros(arch.param_count)
    lam = np.zeros(m)
    adam = AdamState(arch.param_count, step_size=config.eta_theta)
    train_seed, val_seed = np.random.SeedSequence(config.seed).spawn(2)
    train_batches = _batch_stream(train.n, config.batch_size, train_seed)
    val_batches = _batch_stream(val.n, config.batch_size, val_seed)
    rec = _Recorder(problem, arch, train, val, config.steps, config.subsample)
    lams, payoffs = [], []
    for t in range(config.steps):
        rec.offer(t, theta, 1.0)
        tb = train.subset(next(train_batches))
        grad = lagrangian_subgradient(problem, arch, theta, lam, tb,
                                      skip_undefined=True)
        theta = project_theta(adam_step(adam, theta, grad), config.theta_radius)
        vb = val.subset(next(val_batches))
        payoff = _safe_constraints(problem, predict(arch, theta, vb.features), vb)
        lams.append(lam)
        payoffs.append(payoff)
        lam = projected_ascent_update(lam, payoff, eta, radius)
    return rec.finish("lagrangian_practical", lams, payoffs)


_RUNNERS = {"discrete": run_discrete, "continuous": run_continuous,
            "practical": run_practical,
            "lagrangian_practical": run_lagrangian_practical}


def run_solver(problem: ConstrainedProblem, arch: Architecture,
               train: DatasetView, val: DatasetView,
               config: SolverConfig) -> IterateTrace:
    return _RUNNERS[config.algorithm](problem, arch, train, val, config)


def build_weighted_stochastic_classifier(trace: IterateTrace) -> StochasticClassifier:
    """Mixture over stored iterates with probabilities proportional to their
    objective weight (uniform when all weights are equal, as in the additive-
    penalty algorithm)."""
    total = trace.lam1.sum()
    if total <= 0:
        log.warning("all objective weights zero; falling back to uniform")
        weights = np.full(len(trace.lam1), 1.0 / len(trace.lam1))
    else:
        weights = trace.lam1 / total
    return StochasticClassifier(trace.thetas, weights)


def save_trace(trace: IterateTrace, path) -> None:
    """Snapshot metrics as CSV: one row per stored iterate."""
    m = trace.train_violations.shape[1]
    k = trace.lams.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "lam1", "train_objective"]
                        + [f"lam_{j}" for j in range(k)]
                        + [f"train_violation_{i}" for i in range(m)]
                        + [f"val_violation_{i}" for i in range(m)])
        for row, t in enumerate(trace.indices):
            writer.writerow([int(t), repr(float(trace.lam1[row])),
                             repr(float(trace.train_objectives[row]))]
                            + [repr(float(v)) for v in trace.lams[t]]
                            + [repr(float(v)) for v in trace.train_violations[row]]
                            + [repr(float(v)) for v in trace.val_violations[row]])
