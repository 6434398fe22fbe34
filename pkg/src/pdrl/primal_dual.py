"""Stochastic-style primal-dual iteration on the tabular Lagrangian.

Solves min_V max_{mu in simplex} L(V, mu) by simultaneous exact-gradient
steps: V descends the (penalized) Lagrangian, mu ascends along the advantage
table and is projected back onto the simplex. Gradients are full expectations
here; the sampled variant lives in `pdrl.agents`. Keeping mu on the simplex
(rather than the bare nonnegative orthant) bounds the iterates and matches
the normalized occupancy convention in `pdrl.duality`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp, ValueTable, advantage_table, policy_values
from .duality import DualVariable, lagrangian_value, policy_from_dual


@dataclass(frozen=True)
class PdState:
    """Primal-dual iterate: value vector, dual measure, step counter."""

    v: ValueTable
    mu: DualVariable
    step_count: int = 0


def pd_init(mdp: TabularMdp, rng: np.random.Generator | None = None) -> PdState:
    """V = 0 and mu uniform; with an rng, V ~ U[-1,1] and mu a random simplex point."""
    S, A = mdp.n_states, mdp.n_actions
    if rng is None:
        v = np.zeros(S)
        mu = np.full((S, A), 1.0 / (S * A))
    else:
        v = rng.uniform(-1.0, 1.0, size=S)
        mu = rng.dirichlet(np.ones(S * A)).reshape(S, A)
    return PdState(ValueTable(v), DualVariable(mu), 0)


def project_simplex(x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {y >= 0, sum y = 1}, preserving x's shape.

    Sort-and-threshold construction: the projection is max(x - tau, 0) for
    the unique tau making the result sum to one.
    """
    u = np.sort(x.ravel())[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u - (css - 1.0) / k > 0)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(x - tau, 0.0)


def pd_step(state: PdState, mdp: TabularMdp, eta_v: float, eta_mu: float,
            c: float = 0.0) -> PdState:
    """One simultaneous primal-dual update with exact gradients.

        V  <- V - eta_v * grad_V L(V, mu)      (c-penalized Lagrangian)
        mu <- Proj_simplex(mu + eta_mu * A)    (A = advantage table of V)

    The penalty enters the primal gradient weighted by the dual measure,
    i.e. grad_V of (1-gamma) q.V + sum mu(s,a) [A(s,a) + c A(s,a)^2], via
    dA(s,a)/dV(x) = gamma p(x|s,a) - 1{x=s} with per-pair weight
    mu(s,a) (1 + 2c A(s,a)). This is the full-expectation form of the sampled
    update in `pdrl.agents`, where the sampling distribution carries the
    mu-weighting; it also keeps the LP saddle point stationary for c > 0,
    since the weight collapses to mu wherever slackness mu*A = 0 holds. The
    mu ascent uses the plain advantage table.
    """
    if eta_v <= 0 or eta_mu <= 0:
        raise ValueError("step sizes must be positive")
    if c < 0:
        raise ValueError("penalty coefficient c must be nonnegative")
    S, A = mdp.n_states, mdp.n_actions
    flat_p = mdp.transition.reshape(S * A, S)
    v = state.v.v
    adv = mdp.reward + mdp.gamma * (flat_p @ v).reshape(S, A) - v[:, None]
    w = state.mu.mu * (1.0 + (2.0 * c) * adv)
    grad_v = ((1.0 - mdp.gamma) * mdp.q
              + mdp.gamma * (w.reshape(-1) @ flat_p) - w.sum(axis=1))
    v_next = v - eta_v * grad_v
    mu_next = project_simplex(state.mu.mu + eta_mu * adv)
    return PdState(ValueTable(v_next), DualVariable(mu_next), state.step_count + 1)


def duality_gap(state: PdState, mdp: TabularMdp) -> float:
    """Saddle-point progress measure for the c=0 Lagrangian.

    Best-response dual: one-hot mu on the argmax advantage, so
    max_mu L(V, mu) = (1-gamma) q.V + max_{s,a} A(s,a). Best-response primal:
    the linear min over V is taken at the policy evaluation of the policy
    extracted from mu, where L collapses to (1-gamma) * J(pi_mu). The gap is
    nonnegative up to solver precision and zero exactly at the saddle point.
    """
    adv = advantage_table(mdp, state.v)
    best_dual = (1.0 - mdp.gamma) * (mdp.q @ state.v.v) + float(adv.max())
    pi_mu = policy_from_dual(state.mu)
    v_best = policy_values(mdp, pi_mu)
    best_primal = lagrangian_value(mdp, v_best, state.mu, c=0.0)
    return best_dual - best_primal


def run_primal_dual(mdp: TabularMdp, eta_v: float, eta_mu: float, c: float,
                    n_steps: int, state: PdState | None = None,
                    gap_every: int = 0) -> tuple[PdState, list[tuple[int, float]]]:
    """Iterate the pd_step update n_steps times from `state`.

    The loop body repeats pd_step's arithmetic in the same operation order
    (bitwise-identical iterates) without per-step object wrapping, which
    matters at the 10^5-step scale. Optionally records (step, duality_gap)
    every gap_every steps.
    """
    if eta_v <= 0 or eta_mu <= 0:
        raise ValueError("step sizes must be positive")
    if c < 0:
        raise ValueError("penalty coefficient c must be nonnegative")
    if state is None:
        state = pd_init(mdp)
    S, A = mdp.n_states, mdp.n_actions
    flat_p = mdp.transition.reshape(S * A, S)
    reward, gamma, q = mdp.reward, mdp.gamma, mdp.q
    one_minus_gamma_q = (1.0 - gamma) * q
    two_c = 2.0 * c
    k = np.arange(1, S * A + 1)
    v = state.v.v
    mu = state.mu.mu
    step = state.step_count
    gaps = []
    for _ in range(n_steps):
        adv = reward + gamma * (flat_p @ v).reshape(S, A) - v[:, None]
        w = mu * (1.0 + two_c * adv)
        grad_v = one_minus_gamma_q + gamma * (w.reshape(-1) @ flat_p) - w.sum(axis=1)
        v = v - eta_v * grad_v
        x = mu + eta_mu * adv
        u = np.sort(x.ravel())[::-1]
        css = np.cumsum(u)
        rho = np.nonzero(u - (css - 1.0) / k > 0)[0][-1]
        tau = (css[rho] - 1.0) / (rho + 1.0)
        mu = np.maximum(x - tau, 0.0)
        step += 1
        if gap_every and step % gap_every == 0:
            snapshot = PdState(ValueTable(v), DualVariable(mu), step)
            gaps.append((step, duality_gap(snapshot, mdp)))
    return PdState(ValueTable(v), DualVariable(mu), step), gaps
