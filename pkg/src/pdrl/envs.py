"""Self-contained environments: cart-pole balancing and a tabular-MDP adapter.

Both expose the same stepping surface consumed by `pdrl.agents`:

    reset(rng) -> observation
    step(action, rng) -> EnvStep

The cart-pole replicates the classic benchmark's v0 semantics: Euler
integration at dt=0.02, reward 1 per step, termination on |x| > 2.4,
|theta| > 12 degrees, or the 200-step cap (the cap is a terminal event, not a
bootstrapped truncation). Observations are the raw state components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp, Transition, sample_categorical, sample_transition

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
POLE_HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * POLE_HALF_LENGTH
FORCE_MAG = 10.0
DT = 0.02
X_LIMIT = 2.4
THETA_LIMIT = 12.0 * math.pi / 180.0
MAX_STEPS = 200


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    t: int = 0

    def observation(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


@dataclass(frozen=True)
class EnvStep:
    observation: np.ndarray
    reward: float
    terminal: bool


def cartpole_reset(rng: np.random.Generator) -> CartPoleState:
    """All four components uniform in [-0.05, 0.05]; never terminal."""
    x, x_dot, theta, theta_dot = rng.uniform(-0.05, 0.05, size=4)
    return CartPoleState(x, x_dot, theta, theta_dot, t=0)


def cartpole_terminal(state: CartPoleState) -> bool:
    return (abs(state.x) > X_LIMIT or abs(state.theta) > THETA_LIMIT
            or state.t >= MAX_STEPS)


def cartpole_step(state: CartPoleState, action: int) -> tuple[CartPoleState, EnvStep]:
    """One Euler step of the cart-pole dynamics under force +-10 N.

    Reward is 1.0 for every step taken, including the terminating one.
    """
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action}")
    if cartpole_terminal(state):
        raise ValueError("cannot step a terminal cart-pole state")
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    cos_t = math.cos(state.theta)
    sin_t = math.sin(state.theta)
    temp = (force + POLE_MASS_LENGTH * state.theta_dot ** 2 * sin_t) / TOTAL_MASS
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t ** 2 / TOTAL_MASS))
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS
    new = CartPoleState(
        x=state.x + DT * state.x_dot,
        x_dot=state.x_dot + DT * x_acc,
        theta=state.theta + DT * state.theta_dot,
        theta_dot=state.theta_dot + DT * theta_acc,
        t=state.t + 1,
    )
    return new, EnvStep(new.observation(), 1.0, cartpole_terminal(new))


class CartPoleEnv:
    """Stateful wrapper around the functional cart-pole ops."""

    n_actions = 2
    obs_dim = 4

    def __init__(self):
        self.state: CartPoleState | None = None

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = cartpole_reset(rng)
        return self.state.observation()

    def step(self, action: int, rng: np.random.Generator) -> EnvStep:
        # Dynamics are deterministic; rng is part of the shared env protocol.
        self.state, result = cartpole_step(self.state, action)
        return result


class TabularEnvAdapter:
    """Episodic stepping interface over a continuing tabular MDP.

    Observations are one-hot state encodings; episodes end only at the
    horizon, so agents can be tested against oracle-known optima.
    """

    def __init__(self, mdp: TabularMdp, horizon: int):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self.mdp = mdp
        self.horizon = horizon
        self.n_actions = mdp.n_actions
        self.obs_dim = mdp.n_states
        self.state: int | None = None
        self.t = 0

    def _one_hot(self, s: int) -> np.ndarray:
        obs = np.zeros(self.obs_dim)
        obs[s] = 1.0
        return obs

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = sample_categorical(self.mdp.q, rng)
        self.t = 0
        return self._one_hot(self.state)

    def step(self, action: int, rng: np.random.Generator) -> EnvStep:
        tr: Transition = sample_transition(self.mdp, self.state, action, rng)
        self.state = tr.next_state
        self.t += 1
        return EnvStep(self._one_hot(tr.next_state), tr.reward, self.t >= self.horizon)


def tabular_env_adapter(mdp: TabularMdp, horizon: int) -> TabularEnvAdapter:
    """Factory form of TabularEnvAdapter."""
    return TabularEnvAdapter(mdp, horizon)
