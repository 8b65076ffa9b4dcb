"""Planning for one-shot recommendation sessions over latent user types.

A session ends the first time the user declines every displayed item, so the
planner trades immediate click probability against information about the
user's type.  The package provides the ratio choice model, Bayes beliefs on a
simplex grid, exact and greedy value iteration, a session simulator and
numerical checks of the greedy guarantees.
"""

__version__ = "0.1.0"

from .actions import ActionSpace, count_actions, normalize_action
from .belief import BeliefNet, as_belief, build_net, compositions, mixture_choice_prob, posterior, uniform_belief
from .errors import ImpossibleObservationError, InvalidArgumentError, IterationCapError, SizeGuardError
from .finite_mdp import ToyMdp, build_appendix_example, counterexample_rows, q_probe
from .model import ChoiceModel, ChoiceTable, UserTypeModel, assumption_b, check_iia
from .planner import (
    OPERATORS,
    BeliefMdp,
    SetActionMdp,
    Solution,
    TabularMdp,
    exact_bellman,
    greedy_argmax,
    greedy_bellman,
    optimal_values,
    policy_evaluation,
    q_value,
    simple_greedy_bellman,
    value_iteration,
)
from .simulator import ExperimentConfig, ExperimentResult, run_experiment, run_session, sample_scores, simulate_batch

__all__ = [
    "ActionSpace", "count_actions", "normalize_action",
    "BeliefNet", "as_belief", "build_net", "compositions", "mixture_choice_prob", "posterior", "uniform_belief",
    "ImpossibleObservationError", "InvalidArgumentError", "IterationCapError", "SizeGuardError",
    "ToyMdp", "build_appendix_example", "counterexample_rows", "q_probe",
    "ChoiceModel", "ChoiceTable", "UserTypeModel", "assumption_b", "check_iia",
    "OPERATORS", "BeliefMdp", "SetActionMdp", "Solution", "TabularMdp", "exact_bellman", "greedy_argmax",
    "greedy_bellman", "optimal_values", "policy_evaluation", "q_value", "simple_greedy_bellman", "value_iteration",
    "ExperimentConfig", "ExperimentResult", "run_experiment", "run_session", "sample_scores", "simulate_batch",
]
