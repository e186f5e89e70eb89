"""PAC learning in fixed-horizon episodic MDPs with UCFH."""

from .confidence import ProbabilitySet, confidence_set, contains, hull_bounds
from .estimators import UCFH, CertaintyEquivalence, RandomAgent
from .evi import OptimisticPlan, fixed_horizon_evi, greedy_redistribute
from .hard import HardInstanceSpec, make_hard_mdp, policy_bandit_accuracy, sample_hypothesis
from .mdp import (
    FixedHorizonMDP,
    MDPValidationError,
    evaluate_policy,
    load_mdp,
    local_variance,
    occupancy_weights,
    optimal_values,
    sample_episode,
    save_mdp,
    total_return,
    value_variance,
)
from .ucfh import ModelStats, derive_constants, run, run_phase, update_model

__version__ = "0.1.0"
