"""Channel sensing policies for multi-state Markov channels.

A user senses one of N channels per slot, each an unobserved K-state
Markov chain sharing a transition matrix; sensing reveals the channel's
state and earns a state-dependent reward.  The package provides the belief
algebra for this restless-bandit model, the sufficient-condition checker
under which the myopic (stochastically-largest) rule is optimal, the
ordering-based and Gittins-index policies, exact dynamic-programming
oracles, a Monte Carlo simulator, and a structured verification suite.
"""

__version__ = "0.1.0"

from .core import (
    BeliefState,
    DimensionMismatch,
    InvalidDistribution,
    Pmf,
    ProblemSpec,
    Provenance,
    RewardVector,
    TransitionMatrix,
    canonical_belief,
    compare,
    decompose,
    decompose_reconstruct,
    dominates,
    evolve,
    initial_belief,
    observe_update,
)
from .conditions import (
    ConditionReport,
    DegenerateComputation,
    DerivedRewards,
    TwoStateReport,
    check_conditions,
    compute_M,
    compute_U,
    compute_h,
    derived_rewards,
    hull_membership_margin,
    two_state_reduce,
)
from .policies import (
    ChannelOrdering,
    FixedPolicy,
    GittinsDomainError,
    GittinsPolicy,
    IncomparableBeliefs,
    MyopicPolicy,
    OrderingPolicy,
    Policy,
    PolicyDecision,
    RandomPolicy,
    RoundRobinPolicy,
    baseline_action,
    decisions_equivalent,
    gittins_action,
    gittins_band_ok,
    gittins_index,
    lift,
    myopic_action,
    ordering_action,
    ordering_policy_step,
    shift,
    shift_ccw,
    swap,
)
from .evaluation import (
    BeliefTable,
    NodeBudgetExceeded,
    SimulationReport,
    ValueResult,
    infinite_horizon_value,
    optimal_value_dp,
    ordering_value,
    ordering_value_diff,
    policy_value_dp,
    reachable_beliefs,
    simulate,
    truncation_horizon,
)
from .verifier import (
    PropertyReport,
    RejectionExhausted,
    VerifyConfig,
    random_spec,
    replay,
    verify_all,
)
from .instances import (
    InstanceParseError,
    builtin_names,
    builtin_path,
    load_builtin,
    load_instance,
    save_instance,
    spec_from_dict,
    spec_to_dict,
)
