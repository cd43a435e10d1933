"""Shrink a trace of iterates into a sparse stochastic classifier.

Given per-iterate objective values (measured on the training half) and a
matrix of constraint violations (measured on the validation half), find the
distribution over iterates that minimizes the expected objective subject to
every expected violation being at most epsilon, for the smallest feasible
epsilon. The inner problem is a linear program over the probability simplex
whose basic optima put mass on at most m + 1 iterates; the outer search is a
bisection on epsilon.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .datasets import DatasetView
from .lp import InfeasibleError, solve_lp
from .problems import ConstrainedProblem, eval_constraints, eval_objective

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShrinkInput:
    objectives: np.ndarray    # (T,) per-iterate objective, train split
    violations: np.ndarray    # (m, T) per-constraint violation, validation split

    def __post_init__(self):
        obj = np.asarray(self.objectives, dtype=float)
        vio = np.asarray(self.violations, dtype=float)
        if obj.ndim != 1 or vio.ndim != 2 or vio.shape[1] != obj.shape[0]:
            raise ValueError(f"shapes {obj.shape} / {vio.shape} do not line up")
        object.__setattr__(self, "objectives", obj)
        object.__setattr__(self, "violations", vio)


def solve_shrink_lp(inp: ShrinkInput, epsilon: float):
    """min <p, objectives> s.t. violations @ p <= epsilon, p in the simplex.

    Returns (p, value) for a basic optimum (at most m + 1 nonzero weights),
    or raises InfeasibleError.
    """
    m, t = inp.violations.shape
    # variables: p (t) then one slack per constraint row
    c = np.concatenate([inp.objectives, np.zeros(m)])
    a = np.zeros((m + 1, t + m))
    a[:m, :t] = inp.violations
    a[:m, t:] = np.eye(m)
    a[m, :t] = 1.0
    b = np.concatenate([np.full(m, epsilon), [1.0]])
    x, value = solve_lp(c, a, b)
    p = x[:t]
    total = p.sum()
    if abs(total - 1.0) > 1e-7:
        raise InfeasibleError("simplex row not satisfied at optimum")
    return p / total, value


def shrink(inp: ShrinkInput, tol: float = 1e-6, max_rounds: int = 60,
           allow_negative: bool = True):
    """Bisection for the smallest feasible epsilon, then the LP optimum there.

    allow_negative=False clamps the search at epsilon = 0, i.e. settles for
    any mixture with no measured violation instead of the tightest one.

    Returns (weights, epsilon).
    """
    m, t = inp.violations.shape
    if m == 0:
        p = np.zeros(t)
        p[int(np.argmin(inp.objectives))] = 1.0
        return p, 0.0
    # every point mass is feasible at its own max violation, so this is an
    # upper bound; no distribution beats the best per-constraint minimum
    hi = float(inp.violations.max(axis=0).min())
    lo = float(inp.violations.min(axis=1).max())
    if not allow_negative:
        lo = max(lo, 0.0)
        hi = max(hi, 0.0)
    while hi - lo > tol and max_rounds > 0:
        mid = 0.5 * (lo + hi)
        try:
            solve_shrink_lp(inp, mid)
            hi = mid
        except InfeasibleError:
            lo = mid
        max_rounds -= 1
    p, _ = solve_shrink_lp(inp, hi)
    support = int(np.count_nonzero(p > 1e-9))
    assert support <= m + 1, f"vertex solution has support {support} > {m + 1}"
    return p, hi


@dataclass(frozen=True)
class StochasticClassifier:
    """A finite mixture of parameter vectors; predicts by sampling one of them."""

    thetas: np.ndarray        # (k, dim)
    weights: np.ndarray       # (k,) on the simplex

    def __post_init__(self):
        th = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (th.shape[0],):
            raise ValueError("one weight per parameter vector required")
        if w.min() < -1e-9 or abs(w.sum() - 1.0) > 1e-7:
            raise ValueError("weights must lie on the simplex")
        w = np.maximum(w, 0.0)
        object.__setattr__(self, "thetas", th)
        object.__setattr__(self, "weights", w / w.sum())

    @classmethod
    def from_trace(cls, thetas: np.ndarray, weights: np.ndarray,
                   prune: float = 1e-12) -> "StochasticClassifier":
        keep = np.asarray(weights) > prune
        if not keep.any():
            raise ValueError("all mixture weights pruned")
        return cls(np.atleast_2d(thetas)[keep], np.asarray(weights)[keep])

    def sample_theta(self, rng: np.random.Generator) -> np.ndarray:
        return self.thetas[rng.choice(len(self.weights), p=self.weights)]


def evaluate_stochastic(classifier: StochasticClassifier, arch,
                        problem: ConstrainedProblem, data: DatasetView):
    """Expected 0/1 error and true constraint values of the mixture on `data`."""
    from .models import predict
    error = 0.0
    cons = np.zeros(problem.num_constraints)
    for theta, w in zip(classifier.thetas, classifier.weights):
        margins = predict(arch, theta, data.features)
        error += w * eval_objective(problem, margins, data, surrogate=False)
        cons += w * eval_constraints(problem, margins, data)
    return float(error), cons
