"""Shared fixtures and oracle helpers for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from pdrl.mdp import TabularMdp, TabularPolicy, random_mdp


def single_state_mdp() -> TabularMdp:
    """One state, two actions (rewards 1 and 2), gamma 0.9: V* = 2/(1-0.9) = 20."""
    return TabularMdp(n_states=1, n_actions=2, transition=[[[1.0], [1.0]]],
                      reward=[[1.0, 2.0]], gamma=0.9, q=[1.0])


def random_policy(rng: np.random.Generator, n_states: int, n_actions: int) -> TabularPolicy:
    return TabularPolicy(rng.dirichlet(np.ones(n_actions), size=n_states))


def categorical_rows(rng: np.random.Generator, cum_rows: np.ndarray,
                     idx: np.ndarray) -> np.ndarray:
    """Vectorized categorical draw: one sample per row cum_rows[idx[i]]."""
    u = rng.random(idx.size)
    return (u[:, None] > cum_rows[idx]).sum(axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# re-exported for brevity in test modules
__all__ = ["single_state_mdp", "random_policy", "categorical_rows", "random_mdp"]
