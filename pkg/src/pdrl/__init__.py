"""Primal-dual reinforcement learning toolkit.

Layers, bottom up:

    mdp          finite-MDP model, sampling, Bellman quantities
    duality      exact LP-duality oracles (V*, occupancy, certificates)
    primal_dual  tabular saddle-point iteration on the Lagrangian
    nets         dense networks with manual reverse-mode gradients
    agents       the sampled primal-dual learner and its actor-critic benchmark
    envs         cart-pole and a tabular stepping adapter
    harness      seeded trials, CSV persistence, solve statistics
"""
from .mdp import (
    TabularMdp,
    TabularPolicy,
    Transition,
    ValueTable,
    advantage,
    advantage_table,
    evaluate_policy_return,
    load_mdp,
    random_mdp,
    sample_transition,
    save_mdp,
    td_error,
    validate,
)
from .duality import (
    DualVariable,
    StateDistribution,
    complementary_slackness_residual,
    dual_gradient_policy,
    factor_dual,
    greedy_policy,
    lagrangian_value,
    occupancy_measure,
    policy_from_dual,
    stationary_distribution,
    value_iteration,
)
from .primal_dual import PdState, duality_gap, pd_init, pd_step, run_primal_dual
from .nets import (
    GradientBundle,
    Mlp,
    backprop_log_policy,
    backprop_value,
    forward_policy,
    forward_value,
    init_mlp,
    load_mlp,
    save_mlp,
    sgd_step,
)
from .agents import (
    AgentConfig,
    EpisodeResult,
    actor_critic_primal_gradient,
    dual_gradient,
    primal_gradient,
    run_episode,
)
from .envs import CartPoleEnv, CartPoleState, EnvStep, cartpole_reset, cartpole_step, tabular_env_adapter
from .harness import (
    ExperimentConfig,
    RunRecord,
    aggregate_curves,
    compare_report,
    detect_solved,
    read_records,
    run_experiment,
    write_records,
)

__version__ = "0.1.0"
