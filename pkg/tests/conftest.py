import numpy as np
import pytest

from fhrl.mdp import FixedHorizonMDP, random_mdp


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def chain_mdp(num_states=3, horizon=3, reward=1.0):
    """Deterministic cycle s -> s + 1 (mod S) under every action."""
    S = num_states
    P = np.zeros((S, 2, S))
    for s in range(S):
        P[s, :, (s + 1) % S] = 1.0
    start = np.zeros(S)
    start[0] = 1.0
    return FixedHorizonMDP(np.full((horizon, S), reward), P, start)


def random_policy(mdp, rng):
    return rng.integers(0, mdp.num_actions, size=(mdp.horizon, mdp.num_states))


@pytest.fixture
def small_mdp(rng):
    return random_mdp(3, 2, 3, rng)


__all__ = ["chain_mdp", "random_policy", "random_mdp"]
