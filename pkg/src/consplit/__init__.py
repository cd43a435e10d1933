"""Training classifiers under data-dependent rate constraints, with the
constraint player measuring violations on an independent validation split."""

from .covering import Covering, build_covering, nearest_center
from .datasets import (DatasetView, GroupDef, SimulatedSpec, TabularSpec,
                       generate_simulated, load_tabular, split)
from .dynamics import (measure_swap_regret, stationary_distribution,
                       swap_regret_bound, swap_update, theory_swap_step_size)
from .experiment import (ExperimentConfig, compare_generalization, load_config,
                         run_experiment, run_sweep)
from .models import Architecture, init_params, predict
from .problems import (ConstrainedProblem, RateConstraintSpec, eval_constraints,
                       eval_objective)
from .shrinking import (ShrinkInput, StochasticClassifier, evaluate_stochastic,
                        shrink, solve_shrink_lp)
from .solvers import (IterateTrace, SolverConfig,
                      build_weighted_stochastic_classifier, oracle_minimize,
                      run_solver)

__all__ = [
    "Architecture", "ConstrainedProblem", "Covering", "DatasetView",
    "ExperimentConfig", "GroupDef", "IterateTrace", "RateConstraintSpec",
    "ShrinkInput", "SimulatedSpec", "SolverConfig", "StochasticClassifier",
    "TabularSpec", "build_covering", "build_weighted_stochastic_classifier",
    "compare_generalization", "eval_constraints", "eval_objective",
    "evaluate_stochastic", "generate_simulated", "init_params", "load_config",
    "load_tabular", "measure_swap_regret", "nearest_center", "oracle_minimize",
    "predict", "run_experiment", "run_solver", "run_sweep", "shrink",
    "solve_shrink_lp", "split", "stationary_distribution", "swap_regret_bound",
    "swap_update", "theory_swap_step_size",
]

__version__ = "0.1.0"
