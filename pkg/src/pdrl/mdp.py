"""Finite-MDP data model, sampling, and Bellman quantities.

A discounted MDP is stored as dense numpy arrays:

    transition  shape (S, A, S)  — p[s, a, s'], each row p[s, a, :] a distribution
    reward      shape (S, A)     — expected immediate reward r(s, a)
    q           shape (S,)       — initial state distribution

All numerics are 64-bit. Tabular MDPs here are continuing (no terminal
states); episodic structure lives in `pdrl.envs`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TabularMdp:
    """Finite discounted MDP (S states, A actions)."""

    n_states: int
    n_actions: int
    transition: np.ndarray  # (S, A, S)
    reward: np.ndarray      # (S, A)
    gamma: float
    q: np.ndarray           # (S,)

    def __post_init__(self):
        object.__setattr__(self, "transition", np.asarray(self.transition, dtype=np.float64))
        object.__setattr__(self, "reward", np.asarray(self.reward, dtype=np.float64))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=np.float64))


@dataclass(frozen=True)
class TabularPolicy:
    """Randomized stationary policy; probs[s, a] = pi(a | s)."""

    probs: np.ndarray  # (S, A)

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))


@dataclass(frozen=True)
class Transition:
    """One sampled step (s, a, r, s').

    state/next_state are state ids in tabular use and observation feature
    vectors when driving function approximators.
    """

    state: object
    action: int
    reward: float
    next_state: object
    terminal: bool = False


@dataclass(frozen=True)
class ValueTable:
    """State-value vector V of length n_states."""

    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=np.float64))


def validate(mdp: TabularMdp) -> list[str]:
    """Return a list of invariant violations (empty iff the MDP is valid).

    Diagnostic only: never raises. Each message names the offending index.
    """
    problems = []
    S, A = mdp.n_states, mdp.n_actions
    if S < 1:
        problems.append(f"n_states must be positive, got {S}")
    if A < 1:
        problems.append(f"n_actions must be positive, got {A}")
    if mdp.transition.shape != (S, A, S):
        problems.append(f"transition shape {mdp.transition.shape} != {(S, A, S)}")
        return problems  # index checks below would be meaningless
    if mdp.reward.shape != (S, A):
        problems.append(f"reward shape {mdp.reward.shape} != {(S, A)}")
    if mdp.q.shape != (S,):
        problems.append(f"q shape {mdp.q.shape} != {(S,)}")
        return problems
    if not (0.0 <= mdp.gamma < 1.0):
        problems.append(f"gamma out of [0,1): {mdp.gamma}")
    for s in range(S):
        for a in range(A):
            row = mdp.transition[s, a]
            if np.any(row < 0):
                problems.append(f"row ({s},{a}) has negative entries")
            total = row.sum()
            if abs(total - 1.0) > ROW_SUM_TOL:
                problems.append(f"row ({s},{a}) sums to {total}")
    if np.any(mdp.q < 0):
        problems.append("q has negative entries")
    if abs(mdp.q.sum() - 1.0) > ROW_SUM_TOL:
        problems.append(f"q sums to {mdp.q.sum()}")
    if not np.all(np.isfinite(mdp.reward)):
        problems.append("reward has non-finite entries")
    return problems


def sample_transition(mdp: TabularMdp, s: int, a: int, rng: np.random.Generator) -> Transition:
    """Draw s' ~ p[s, a, :] and return the observed (s, a, r, s') tuple.

    Tabular MDPs are continuing, so terminal is always False.
    """
    if not (0 <= s < mdp.n_states and 0 <= a < mdp.n_actions):
        raise ValueError(f"state/action ({s},{a}) out of range")
    next_state = sample_categorical(mdp.transition[s, a], rng)
    return Transition(state=s, action=a, reward=float(mdp.reward[s, a]),
                      next_state=next_state, terminal=False)


def sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from a probability vector."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(idx, len(probs) - 1)


def advantage(mdp: TabularMdp, v: ValueTable, s: int, a: int) -> float:
    """A(s,a) = r(s,a) + gamma * E_{s'|s,a}[V(s')] - V(s), exact expectation."""
    return float(mdp.reward[s, a] + mdp.gamma * mdp.transition[s, a] @ v.v - v.v[s])


def advantage_table(mdp: TabularMdp, v: ValueTable, gamma: float | None = None) -> np.ndarray:
    """Full advantage table A[s, a]; gamma can be overridden (default mdp.gamma)."""
    g = mdp.gamma if gamma is None else gamma
    return mdp.reward + g * (mdp.transition @ v.v) - v.v[:, None]


def td_error(transition: Transition, v_s: float, v_s_next: float, gamma: float) -> float:
    """One-step TD error delta = r + gamma * V(s') - V(s).

    Terminal transitions bootstrap from zero: V(s') is ignored.
    """
    bootstrap = 0.0 if transition.terminal else gamma * v_s_next
    return float(transition.reward + bootstrap - v_s)


def policy_transition_matrix(mdp: TabularMdp, policy: TabularPolicy) -> np.ndarray:
    """State-to-state matrix P_pi[s, s'] = sum_a pi(a|s) p[s, a, s']."""
    return np.einsum("sa,sap->sp", policy.probs, mdp.transition)


def policy_reward_vector(mdp: TabularMdp, policy: TabularPolicy) -> np.ndarray:
    """r_pi[s] = sum_a pi(a|s) r(s, a)."""
    return np.einsum("sa,sa->s", policy.probs, mdp.reward)


def policy_values(mdp: TabularMdp, policy: TabularPolicy) -> ValueTable:
    """Exact V^pi from the linear system (I - gamma * P_pi) V = r_pi."""
    P_pi = policy_transition_matrix(mdp, policy)
    r_pi = policy_reward_vector(mdp, policy)
    A = np.eye(mdp.n_states) - mdp.gamma * P_pi
    v = np.linalg.solve(A, r_pi)
    residual = np.max(np.abs(A @ v - r_pi))
    if residual > 1e-8:
        raise ArithmeticError(f"policy evaluation residual {residual:.3e} exceeds 1e-8")
    return ValueTable(v)


def evaluate_policy_return(mdp: TabularMdp, policy: TabularPolicy) -> float:
    """J(pi) = E_{s0~q}[V^pi(s0)], the expected discounted return from q."""
    return float(mdp.q @ policy_values(mdp, policy).v)


def random_mdp(rng: np.random.Generator, n_states: int, n_actions: int,
               gamma: float = 0.9) -> TabularMdp:
    """Random dense instance: Dirichlet(1) transition rows and q, U[0,1] rewards."""
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    reward = rng.random((n_states, n_actions))
    q = rng.dirichlet(np.ones(n_states))
    return TabularMdp(n_states=n_states, n_actions=n_actions, transition=transition,
                      reward=reward, gamma=gamma, q=q)


def save_mdp(mdp: TabularMdp, path: str) -> None:
    """Write the human-readable instance format (see load_mdp)."""
    lines = [
        "# pdrl tabular MDP instance",
        f"n_states {mdp.n_states}",
        f"n_actions {mdp.n_actions}",
        f"gamma {mdp.gamma!r}",
        "q " + " ".join(repr(float(x)) for x in mdp.q),
    ]
    for s in range(mdp.n_states):
        lines.append(f"reward {s} " + " ".join(repr(float(x)) for x in mdp.reward[s]))
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            lines.append(f"transition {s} {a} "
                         + " ".join(repr(float(x)) for x in mdp.transition[s, a]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mdp(path: str) -> TabularMdp:
    """Parse the line-oriented instance format.

    Schema ('#' starts a comment, blank lines ignored):

        n_states N
        n_actions A
        gamma G
        q p0 ... p_{N-1}
        reward s r_a0 ... r_a{A-1}          (one line per state)
        transition s a p0 ... p_{N-1}       (one line per state-action pair)

    Raises ValueError naming the offending line for malformed or missing data.
    """
    n_states = n_actions = None
    gamma = q = None
    reward_rows: dict[int, np.ndarray] = {}
    trans_rows: dict[tuple[int, int], np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            key = fields[0]
            try:
                if key == "n_states":
                    n_states = int(fields[1])
                elif key == "n_actions":
                    n_actions = int(fields[1])
                elif key == "gamma":
                    gamma = float(fields[1])
                elif key == "q":
                    q = np.array([float(x) for x in fields[1:]])
                elif key == "reward":
                    reward_rows[int(fields[1])] = np.array([float(x) for x in fields[2:]])
                elif key == "transition":
                    s, a = int(fields[1]), int(fields[2])
                    trans_rows[(s, a)] = np.array([float(x) for x in fields[3:]])
                else:
                    raise ValueError(f"unknown key {key!r}")
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r} ({exc})") from exc
    for name, value in [("n_states", n_states), ("n_actions", n_actions),
                        ("gamma", gamma), ("q", q)]:
        if value is None:
            raise ValueError(f"{path}: missing {name}")
    transition = np.zeros((n_states, n_actions, n_states))
    reward = np.zeros((n_states, n_actions))
    for s in range(n_states):
        if s not in reward_rows:
            raise ValueError(f"{path}: missing reward line for state {s}")
        if reward_rows[s].shape != (n_actions,):
            raise ValueError(f"{path}: reward row {s} has {len(reward_rows[s])} entries, "
                             f"expected {n_actions}")
        reward[s] = reward_rows[s]
        for a in range(n_actions):
            if (s, a) not in trans_rows:
                raise ValueError(f"{path}: missing transition line for ({s},{a})")
            if trans_rows[(s, a)].shape != (n_states,):
                raise ValueError(f"{path}: transition row ({s},{a}) has "
                                 f"{len(trans_rows[(s, a)])} entries, expected {n_states}")
            transition[s, a] = trans_rows[(s, a)]
    return TabularMdp(n_states=n_states, n_actions=n_actions, transition=transition,
                      reward=reward, gamma=gamma, q=q)
