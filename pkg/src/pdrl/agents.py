"""Deep primal-dual policy learning and its one-step TD actor-critic benchmark.

Both agents share the same episode loop and the same policy (dual) update

    theta_pi <- theta_pi + eta_pi * grad log pi(a|s) * delta

so the comparison isolates the value (primal) rule. The primal-dual agent
descends the sampled gradient of the penalized Lagrangian surrogate

    l(theta_v) = (1-gamma) V(s0) + delta(theta_v) + c * delta(theta_v)^2

where the transition (s, a) is drawn from the distribution the current policy
induces, which stands in for the dual measure (so the linear term carries
sample weight 1). Both V(s) and V(s') receive gradient — the full-gradient
coupling is exactly what distinguishes the method from the semi-gradient
actor-critic baseline, whose value rule treats r + gamma V(s') as a constant
target. The (1-gamma) V(s0) term uses the current episode's start state as a
stand-in for a fresh draw from the initial distribution; include_start_term
ablates it.

delta is always computed before the primal update touches theta_v, and the
dual update consumes that same pre-update delta. Terminal transitions
bootstrap from zero and drop the V(s') gradient path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Transition, sample_categorical, td_error
from .nets import (
    GradientBundle,
    Mlp,
    backprop_log_policy,
    backprop_value,
    bundle_sum,
    forward_policy,
    forward_value,
    sgd_step,
)

ALGORITHMS = ("primal_dual", "actor_critic")


@dataclass(frozen=True)
class AgentConfig:
    """Step sizes and loop bounds for one agent.

    Defaults are the reported benchmark hyperparameters. gamma = 1 is
    tolerated at construction for coefficient-arithmetic checks; validate()
    enforces the training contract and is called at the harness boundary.
    """

    eta_v: float = 0.001
    eta_pi: float = 0.00001
    gamma: float = 0.99
    c: float = 1.0
    max_steps: int = 200
    algorithm: str = "primal_dual"
    include_start_term: bool = True

    def validate(self) -> None:
        if self.eta_v < 0 or self.eta_pi < 0:
            raise ValueError("step sizes must be nonnegative")
        if self.c < 0:
            raise ValueError("penalty coefficient c must be nonnegative")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma out of [0,1): {self.gamma}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@dataclass(frozen=True)
class EpisodeResult:
    episode_index: int
    cumulative_reward: float
    steps: int


def primal_gradient(value_net: Mlp, transition: Transition,
                    s0_features: np.ndarray, config: AgentConfig) -> GradientBundle:
    """Sampled value-network gradient of the penalized Lagrangian surrogate.

        g = (1-gamma) grad V(s0) + (1 + 2c*delta) * (gamma grad V(s') - grad V(s))

    delta is recomputed here from the current theta_v (the caller must not
    have applied this step's primal update yet). For terminal transitions the
    grad V(s') path is dropped. The same sampled delta appears in both factors
    of the penalty gradient; on deterministic transitions delta equals the
    advantage exactly, so no double-sampling bias arises there.
    """
    gamma, c = config.gamma, config.c
    v_s = forward_value(value_net, transition.state)
    v_next = 0.0 if transition.terminal else forward_value(value_net, transition.next_state)
    delta = td_error(transition, v_s, v_next, gamma)
    coef = 1.0 + 2.0 * c * delta
    parts = [backprop_value(value_net, transition.state, upstream=-coef)]
    if not transition.terminal:
        parts.append(backprop_value(value_net, transition.next_state, upstream=coef * gamma))
    if config.include_start_term:
        parts.append(backprop_value(value_net, s0_features, upstream=1.0 - gamma))
    return bundle_sum(parts)


def actor_critic_primal_gradient(value_net: Mlp, transition: Transition,
                                 delta: float) -> GradientBundle:
    """Semi-gradient TD rule: g = -delta * grad V(s), target held constant."""
    return backprop_value(value_net, transition.state, upstream=-delta)


def dual_gradient(policy_net: Mlp, transition: Transition,
                  delta: float) -> GradientBundle:
    """Policy-gradient ascent direction grad log pi(a|s) * delta."""
    return backprop_log_policy(policy_net, transition.state, transition.action).scaled(delta)


def run_episode(value_net: Mlp, policy_net: Mlp, env, config: AgentConfig,
                rng: np.random.Generator,
                episode_index: int = 0) -> tuple[EpisodeResult, tuple[Mlp, Mlp]]:
    """One episode of interleaved per-transition primal and dual updates.

    Per step: sample a ~ pi(.|s), observe (r, s'), compute delta with the
    current value net, apply the primal update, then the dual update with the
    pre-update delta. Episodes end at a terminal observation or after
    config.max_steps transitions. Networks are updated in place.
    """
    obs = env.reset(rng)
    s0 = obs
    total = 0.0
    steps = 0
    for _ in range(config.max_steps):
        probs = forward_policy(policy_net, obs)
        action = sample_categorical(probs, rng)
        try:
            result = env.step(action, rng)
        except Exception as exc:
            raise RuntimeError(f"environment fault at step {steps + 1}") from exc
        tr = Transition(state=obs, action=action, reward=result.reward,
                        next_state=result.observation, terminal=result.terminal)
        v_s = forward_value(value_net, obs)
        v_next = 0.0 if result.terminal else forward_value(value_net, result.observation)
        delta = td_error(tr, v_s, v_next, config.gamma)
        if config.algorithm == "primal_dual":
            g_primal = primal_gradient(value_net, tr, s0, config)
        else:
            g_primal = actor_critic_primal_gradient(value_net, tr, delta)
        sgd_step(value_net, g_primal, config.eta_v, direction=-1)
        sgd_step(policy_net, dual_gradient(policy_net, tr, delta),
                 config.eta_pi, direction=+1)
        total += result.reward
        steps += 1
        obs = result.observation
        if result.terminal:
            break
    return EpisodeResult(episode_index, total, steps), (value_net, policy_net)
