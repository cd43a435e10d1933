"""Constrained problems: rate constraints, hinge surrogates, game objective evaluation.

Every constraint compiles, on a given dataset, into a short list of weighted
indicator terms plus a constant, normalized so that value <= 0 means satisfied.
The true value uses step indicators; the surrogate replaces each indicator with
a unit-margin hinge bound in the direction that preserves "surrogate >= true"
pointwise (upper bound where the weight is positive, lower bound where it is
negative).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .datasets import DatasetView, SchemaError

log = logging.getLogger(__name__)

CONSTRAINT_KINDS = (
    "recall_floor",
    "positive_rate_ratio_floor",
    "positive_rate_gap_cap_on_positives",
    "group_fpr_vs_overall",
)


class UndefinedConstraintError(ValueError):
    """A constraint's denominator group is empty on the data it is evaluated on."""


class ContractError(ValueError):
    """A multiplier vector violates its domain constraint beyond tolerance."""


@dataclass(frozen=True)
class RateConstraintSpec:
    """One rate constraint, compiled to 'value <= 0 means satisfied'.

    kind:
      recall_floor                        recall >= threshold
      positive_rate_ratio_floor           group positive rate >= threshold * overall rate
      positive_rate_gap_cap_on_positives  group TPR <= overall TPR + threshold
      group_fpr_vs_overall                group FPR <= overall FPR + threshold
    group: index into DatasetView.groups (ignored by recall_floor).
    """

    kind: str
    threshold: float = 0.0
    group: int | None = None

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind != "recall_floor" and self.group is None:
            raise ValueError(f"{self.kind} needs a group index")


@dataclass(frozen=True)
class ConstrainedProblem:
    constraints: tuple

    def __post_init__(self):
        cs = tuple(self.constraints)
        if len(cs) < 1:
            raise ValueError("need at least one constraint")
        object.__setattr__(self, "constraints", cs)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)


# A compiled term: (weights over examples, direction). direction +1 means the
# indicator 1{f >= 0} (counted as a positive prediction), -1 means 1{f <= 0}.
Term = tuple  # (np.ndarray, int)


def _group_mask(spec: RateConstraintSpec, data: DatasetView) -> np.ndarray:
    if spec.group is None or not (0 <= spec.group < data.num_groups):
        raise SchemaError(f"group index {spec.group} not in dataset "
                          f"with {data.num_groups} groups")
    return data.groups[:, spec.group]


def _rate_weights(mask: np.ndarray, what: str) -> np.ndarray:
    """Weights averaging the indicator over `mask`; errors if the mask is empty."""
    count = int(mask.sum())
    if count == 0:
        raise UndefinedConstraintError(f"empty denominator group for {what}")
    return mask.astype(float) / count


def compile_constraint(spec: RateConstraintSpec, data: DatasetView):
    """Return (terms, constant) for a constraint on this dataset.

    Denominator probabilities are recomputed from `data`, the dataset the
    metric is evaluated on.
    """
    y = data.labels
    if spec.kind == "recall_floor":
        # false-negative rate on positives must not exceed 1 - threshold
        w = _rate_weights(y > 0, "recall_floor positives")
        return [(w, -1)], spec.threshold - 1.0
    if spec.kind == "positive_rate_ratio_floor":
        g = _group_mask(spec, data)
        overall = np.full(data.n, spec.threshold / data.n)
        group = -_rate_weights(g, "ratio-floor group")
        return [(overall, +1), (group, +1)], 0.0
    if spec.kind == "positive_rate_gap_cap_on_positives":
        g = _group_mask(spec, data)
        pos = y > 0
        group = _rate_weights(g & pos, "gap-cap group positives")
        overall = -_rate_weights(pos, "gap-cap positives")
        return [(group, +1), (overall, +1)], -spec.threshold
    if spec.kind == "group_fpr_vs_overall":
        g = _group_mask(spec, data)
        neg = y < 0
        group = _rate_weights(g & neg, "fpr group negatives")
        overall = -_rate_weights(neg, "fpr negatives")
        return [(group, +1), (overall, +1)], -spec.threshold
    raise AssertionError(spec.kind)


def _indicator(margins: np.ndarray, direction: int) -> np.ndarray:
    return (margins >= 0).astype(float) if direction > 0 else (margins <= 0).astype(float)


def _surrogate(margins: np.ndarray, direction: int, upper: bool) -> np.ndarray:
    # unit-margin hinge; the lower bound is one minus the hinge of the negation
    if upper:
        return np.maximum(0.0, 1.0 + direction * margins)
    return 1.0 - np.maximum(0.0, 1.0 - direction * margins)


def _surrogate_slope(margins: np.ndarray, direction: int, upper: bool) -> np.ndarray:
    if upper:
        return direction * (1.0 + direction * margins > 0)
    return direction * (1.0 - direction * margins > 0)


def _term_value(term: Term, margins: np.ndarray, surrogate: bool) -> float:
    w, direction = term
    if not surrogate:
        return float(w @ _indicator(margins, direction))
    upper = bool(w.max(initial=0.0) > 0)  # weights are uniformly signed per term
    return float(w @ _surrogate(margins, direction, upper))


def constraint_value(spec: RateConstraintSpec, margins: np.ndarray,
                     data: DatasetView, surrogate: bool = False) -> float:
    terms, const = compile_constraint(spec, data)
    return sum(_term_value(t, margins, surrogate) for t in terms) + const


def constraint_margin_gradient(spec: RateConstraintSpec, margins: np.ndarray,
                               data: DatasetView) -> np.ndarray:
    """d(surrogate value)/d(margins), one entry per example."""
    terms, _ = compile_constraint(spec, data)
    out = np.zeros_like(margins)
    for w, direction in terms:
        upper = bool(w.max(initial=0.0) > 0)
        out += w * _surrogate_slope(margins, direction, upper)
    return out


def objective_value(margins: np.ndarray, labels: np.ndarray,
                    surrogate: bool = True) -> float:
    """Mean hinge loss (surrogate) or 0/1 error over the data."""
    if surrogate:
        return float(np.mean(np.maximum(0.0, 1.0 - labels * margins)))
    return float(np.mean(labels * margins <= 0))


def objective_margin_gradient(margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
    return -labels * (1.0 - labels * margins > 0) / len(margins)


def eval_objective(problem: ConstrainedProblem, margins: np.ndarray,
                   data: DatasetView, surrogate: bool = True) -> float:
    if len(margins) != data.n:
        raise SchemaError("margins length does not match dataset")
    return objective_value(margins, data.labels, surrogate)


def eval_constraints(problem: ConstrainedProblem, margins: np.ndarray,
                     data: DatasetView) -> np.ndarray:
    """True (indicator) constraint values; <= 0 means satisfied."""
    return np.array([constraint_value(c, margins, data, surrogate=False)
                     for c in problem.constraints])


def eval_proxy_constraints(problem: ConstrainedProblem, margins: np.ndarray,
                           data: DatasetView) -> np.ndarray:
    return np.array([constraint_value(c, margins, data, surrogate=True)
                     for c in problem.constraints])


def check_simplex(lam: np.ndarray, size: int, tol: float = 1e-9) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (size,):
        raise ContractError(f"multiplier vector must have length {size}")
    if lam.min() < -tol or abs(lam.sum() - 1.0) > tol:
        raise ContractError(f"multipliers off the simplex beyond {tol}: {lam}")
    if lam.min() < 0:
        log.debug("clamping slightly negative multiplier coordinates to 0")
        lam = np.maximum(lam, 0.0)
    return lam


def eval_game_objective_side(problem: ConstrainedProblem, margins: np.ndarray,
                             lam: np.ndarray, train: DatasetView) -> float:
    """Objective-player value: lam[0] * hinge objective + sum lam[i+1] * proxy_i."""
    lam = check_simplex(lam, problem.num_constraints + 1)
    value = lam[0] * eval_objective(problem, margins, train, surrogate=True)
    proxies = eval_proxy_constraints(problem, margins, train)
    return float(value + lam[1:] @ proxies)


def eval_game_constraint_side(problem: ConstrainedProblem, margins: np.ndarray,
                              lam: np.ndarray, val: DatasetView) -> float:
    """Constraint-player value: sum lam[i+1] * true constraint_i, no objective term."""
    lam = check_simplex(lam, problem.num_constraints + 1)
    return float(lam[1:] @ eval_constraints(problem, margins, val))


def lambda_gradient(problem: ConstrainedProblem, margins: np.ndarray,
                    data: DatasetView) -> np.ndarray:
    """(0, c_1, ..., c_m): true constraint values prefixed by a zero coordinate."""
    return np.concatenate(([0.0], eval_constraints(problem, margins, data)))


def eval_lagrangian(problem: ConstrainedProblem, margins: np.ndarray,
                    lam: np.ndarray, data: DatasetView,
                    use_proxies: bool = False) -> float:
    """Objective plus lam-weighted constraints; lam is a nonnegative length-m vector.

    The objective-player variant (use_proxies=True) weights the hinge surrogates;
    the constraint player sees the true indicator-based values.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (problem.num_constraints,) or lam.min() < -1e-9:
        raise ContractError("lagrangian multipliers must be a nonnegative length-m vector")
    cons = (eval_proxy_constraints if use_proxies else eval_constraints)(
        problem, margins, data)
    return float(eval_objective(problem, margins, data, surrogate=True) + lam @ cons)
