"""Exact tabular LP-duality layer.

The Bellman optimality LP

    minimize   (1-gamma) * q . V
    subject to V(s) >= r(s,a) + gamma * E_{s'|s,a}[V(s')]   for all (s,a)

has dual variables mu(s,a) >= 0 that form a discounted state-action occupancy
measure. This module computes both sides exactly (value iteration, linear
solves) together with the certificates that tie them together: the dual ->
policy factorization mu(s,a) = alpha(s) * pi(a|s), complementary slackness
mu(s,a) * A(s,a) = 0, and the Lagrangian

    L(V, mu) = (1-gamma) * q.V + sum_{s,a} [mu(s,a) * A(s,a) + c * A(s,a)^2]

whose c=0 case is the plain LP Lagrangian. Everything here is an oracle for
the stochastic/parametrized solvers in `pdrl.primal_dual` and `pdrl.agents`.

Occupancy measures follow the normalized convention: total mass 1, i.e. the
raw discounted visitation sum scaled by (1-gamma). Rescaling changes no
argmax, factorization, or slackness test.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from .mdp import (
    TabularMdp,
    TabularPolicy,
    ValueTable,
    advantage_table,
    policy_transition_matrix,
)


@dataclass(frozen=True)
class DualVariable:
    """Nonnegative state-action measure mu[s, a]."""

    mu: np.ndarray  # (S, A)

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=np.float64))


@dataclass(frozen=True)
class StateDistribution:
    """Probability vector over states (houses both alpha and rho_pi)."""

    alpha: np.ndarray  # (S,)

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach tolerance within its budget."""


def bellman_backup(mdp: TabularMdp, v: np.ndarray) -> np.ndarray:
    """(T V)(s) = max_a [r(s,a) + gamma * p(.|s,a) . V]."""
    return np.max(mdp.reward + mdp.gamma * (mdp.transition @ v), axis=1)


def value_iteration(mdp: TabularMdp, tol: float = 1e-12,
                    max_iters: int = 200_000) -> tuple[ValueTable, int]:
    """Fixed point of the max-backup; the optimal values V* of the primal LP.

    Returns (V, iterations). The returned V satisfies ||T V - V||_inf <= tol:
    we stop once successive iterates differ by <= tol and return the *updated*
    iterate, whose own backup residual is then <= gamma * tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.zeros(mdp.n_states)
    for it in range(1, max_iters + 1):
        v_next = bellman_backup(mdp, v)
        diff = np.max(np.abs(v_next - v))
        v = v_next
        if diff <= tol:
            return ValueTable(v), it
    raise ConvergenceError(
        f"value iteration did not reach tol={tol} in {max_iters} iterations "
        f"(final residual {diff:.3e})")


def greedy_policy(mdp: TabularMdp, v: ValueTable) -> TabularPolicy:
    """One-hot argmax_a [r + gamma p.V]; ties break to the lowest action index."""
    qvals = mdp.reward + mdp.gamma * (mdp.transition @ v.v)
    probs = np.zeros_like(qvals)
    probs[np.arange(mdp.n_states), np.argmax(qvals, axis=1)] = 1.0
    return TabularPolicy(probs)


def occupancy_measure(mdp: TabularMdp, policy: TabularPolicy) -> DualVariable:
    """Normalized discounted occupancy mu^pi(s,a).

    Solves the flow equation (I - gamma * P_pi^T) d = (1-gamma) * q for the
    state marginal d, then mu(s,a) = d(s) * pi(a|s). Total mass is 1 and mu
    satisfies stationarity to linear-solver precision.
    """
    S = mdp.n_states
    P_pi = policy_transition_matrix(mdp, policy)
    A = np.eye(S) - mdp.gamma * P_pi.T
    b = (1.0 - mdp.gamma) * mdp.q
    d = np.linalg.solve(A, b)
    residual = np.max(np.abs(A @ d - b))
    if residual > 1e-8:
        raise ArithmeticError(f"occupancy solve residual {residual:.3e} exceeds 1e-8")
    if np.any(d < -1e-9):
        raise ArithmeticError(f"occupancy marginal has negative mass {d.min():.3e}")
    d = np.maximum(d, 0.0)  # clip solver dust; true d is nonnegative
    return DualVariable(d[:, None] * policy.probs)


def policy_from_dual(mu: DualVariable) -> TabularPolicy:
    """pi(a|s) = mu(s,a) / sum_a mu(s,a).

    Zero-mass rows get the uniform policy: the LP dual leaves actions at
    unvisited states unconstrained, and uniform is the canonical completion.
    """
    m = mu.mu
    totals = m.sum(axis=1, keepdims=True)
    n_actions = m.shape[1]
    probs = np.where(totals > 0, m / np.where(totals > 0, totals, 1.0),
                     1.0 / n_actions)
    return TabularPolicy(probs)


def factor_dual(mu: DualVariable) -> tuple[StateDistribution, TabularPolicy]:
    """Factor mu(s,a) = alpha(s) * pi(a|s) with alpha the state marginal.

    alpha is normalized by the total mass, so alpha(s) * pi(a|s) * total
    reconstructs mu exactly. Zero total mass is rejected.
    """
    total = mu.mu.sum()
    if total <= 0:
        raise ValueError("cannot factor a dual variable with zero total mass")
    alpha = mu.mu.sum(axis=1) / total
    return StateDistribution(alpha), policy_from_dual(mu)


def lagrangian_value(mdp: TabularMdp, v: ValueTable, mu: DualVariable,
                     c: float = 0.0) -> float:
    """L(V, mu) = (1-gamma) q.V + sum_{s,a} [mu(s,a) A(s,a) + c A(s,a)^2].

    c = 0 is the exact LP Lagrangian; c > 0 adds the advantage-squared
    penalty that regularizes the parametrized saddle-point problem.
    """
    if c < 0:
        raise ValueError("penalty coefficient c must be nonnegative")
    adv = advantage_table(mdp, v)
    return float((1.0 - mdp.gamma) * (mdp.q @ v.v)
                 + np.sum(mu.mu * adv) + c * np.sum(adv ** 2))


def complementary_slackness_residual(mdp: TabularMdp, v: ValueTable,
                                     mu: DualVariable) -> float:
    """max_{s,a} |mu(s,a) * A(s,a)| — zero iff the KKT slackness holds."""
    return float(np.max(np.abs(mu.mu * advantage_table(mdp, v))))


def dual_gradient_policy(mdp: TabularMdp, v: ValueTable, alpha: StateDistribution,
                         policy_logits: np.ndarray,
                         gamma_override: float | None = None) -> np.ndarray:
    """Exact gradient of sum_{s,a} alpha(s) pi(a|s) A(s,a) in the logits.

    pi is the row-wise softmax of policy_logits and A is the advantage of the
    fixed value table v (with gamma_override substituting the discount, which
    supports the gamma=1 reduction used in the policy-gradient equivalence).
    The softmax Jacobian gives, per logit (s, b),

        g[s, b] = alpha(s) * pi(b|s) * (A(s,b) - sum_a pi(a|s) A(s,a))
    """
    logits = np.asarray(policy_logits, dtype=np.float64)
    pi = softmax_rows(logits)
    adv = advantage_table(mdp, v, gamma=gamma_override)
    baseline = np.sum(pi * adv, axis=1, keepdims=True)
    return alpha.alpha[:, None] * pi * (adv - baseline)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def stationary_distribution(mdp: TabularMdp, policy: TabularPolicy,
                            damping: float = 1e-3,
                            max_iters: int = 1_000_000) -> StateDistribution:
    """Stationary state distribution rho of the chain induced by the policy.

    Power iteration from q on the damped kernel

        P_d = (1 - damping) * P_pi + damping * uniform

    which is irreducible and aperiodic, so the fixed point exists and is
    unique; it is reported as-is (the damping is part of the contract). If the
    undamped chain is reducible the damped fixed point can differ from any
    visitation frequency of the raw chain, so that case is flagged with a
    warning.
    """
    S = mdp.n_states
    P_pi = policy_transition_matrix(mdp, policy)
    if damping > 0 and S > 1:
        n_comp, _ = connected_components(csr_matrix(P_pi > 0), connection="strong")
        if n_comp > 1:
            warnings.warn(
                f"induced chain is reducible ({n_comp} strongly connected "
                "components); returning the damping-smoothed fixed point",
                RuntimeWarning, stacklevel=2)
    P_d = (1.0 - damping) * P_pi + damping / S
    rho = mdp.q.copy()
    for _ in range(max_iters):
        rho_next = rho @ P_d
        converged = np.abs(rho_next - rho).sum() <= 1e-13
        rho = rho_next
        if converged:
            break
    else:
        raise ConvergenceError(
            "power iteration did not converge (periodic or reducible chain?)")
    rho = rho / rho.sum()
    return StateDistribution(rho)
