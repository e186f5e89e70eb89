"""Estimator-style wrappers around the learning agents.

``fit(mdp)`` runs the agent against the (simulated) environment for
``budget`` episodes; the learned nonstationary policy is then exposed through
``predict``. Hyperparameters follow the scikit-learn conventions, so
``get_params``, ``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_random_state

from . import baselines, ucfh
from .mdp import FixedHorizonMDP, total_return


def check_mdp(mdp) -> FixedHorizonMDP:
    if not isinstance(mdp, FixedHorizonMDP):
        raise TypeError(f"expected a FixedHorizonMDP, got {type(mdp).__name__}")
    return mdp


def check_queries(X, horizon: int, num_states: int) -> np.ndarray:
    """Validate an (n, 2) array of (timestep, state) queries."""
    X = np.asarray(X)
    if X.ndim == 1 and X.shape[0] == 2:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array of (timestep, state) pairs, got shape {X.shape}")
    if not np.issubdtype(X.dtype, np.integer):
        if not np.all(X == np.round(X)):
            raise ValueError("timesteps and states must be integers")
        X = X.astype(int)
    if X[:, 0].min(initial=0) < 0 or X[:, 0].max(initial=0) >= horizon:
        raise ValueError(f"timesteps must lie in 0..{horizon - 1}")
    if X[:, 1].min(initial=0) < 0 or X[:, 1].max(initial=0) >= num_states:
        raise ValueError(f"states must lie in 0..{num_states - 1}")
    return X


def _make_rng(random_state):
    """Generator from a seed, a Generator, or a legacy RandomState."""
    if isinstance(random_state, np.random.Generator):
        return random_state, None
    if random_state is None or isinstance(random_state, (int, np.integer)):
        return np.random.default_rng(random_state), random_state
    rs = check_random_state(random_state)
    return np.random.default_rng(rs.randint(2**31 - 1)), None


class _AgentBase(BaseEstimator):
    def _fit_record(self, mdp, rng, seed):
        raise NotImplementedError

    def fit(self, mdp, y=None):
        mdp = check_mdp(mdp)
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        rng, seed = _make_rng(self.random_state)
        self.record_ = self._fit_record(mdp, rng, seed)
        self.policy_ = np.asarray(self.record_.final_policy)
        self.horizon_, self.n_states_, self.n_actions_ = mdp.horizon, mdp.num_states, mdp.num_actions
        return self

    def _check_fitted(self):
        if not hasattr(self, "policy_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit(mdp) first")

    def predict(self, X) -> np.ndarray:
        """Actions for (timestep, state) pairs; stochastic policies return their mode."""
        self._check_fitted()
        X = check_queries(X, self.horizon_, self.n_states_)
        table = self.policy_ if self.policy_.ndim == 2 else np.argmax(self.policy_, axis=2)
        return table[X[:, 0], X[:, 1]]

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_queries(X, self.horizon_, self.n_states_)
        if self.policy_.ndim == 3:
            return self.policy_[X[:, 0], X[:, 1]]
        out = np.zeros((len(X), self.n_actions_))
        out[np.arange(len(X)), self.policy_[X[:, 0], X[:, 1]]] = 1.0
        return out

    def score(self, mdp, y=None) -> float:
        """Expected return of the learned policy on ``mdp``."""
        self._check_fitted()
        return total_return(check_mdp(mdp), self.policy_)


class UCFH(_AgentBase):
    """Upper-confidence fixed-horizon learner.

    Parameters
    ----------
    eps, delta : accuracy and failure probability.
    m_override : sample threshold replacing the theoretical m (None keeps it).
    budget : number of episodes to run in ``fit``.
    random_state : seed or generator for episode sampling.

    Attributes
    ----------
    policy_ : (H, S) final policy.
    record_ : :class:`~fhrl.records.ExperimentRecord` of the run.
    constants_ : :class:`~fhrl.ucfh.UcfhConstants`.
    stats_ : final :class:`~fhrl.ucfh.ModelStats`.
    """

    def __init__(self, eps=0.1, delta=0.1, m_override=None, budget=1000, random_state=None):
        self.eps = eps
        self.delta = delta
        self.m_override = m_override
        self.budget = budget
        self.random_state = random_state

    def _fit_record(self, mdp, rng, seed):
        record = ucfh.run(mdp, self.eps, self.delta, self.m_override, self.budget, rng=rng, seed=seed)
        self.constants_ = ucfh.derive_constants(self.eps, self.delta, mdp.skeleton, self.m_override)
        self.stats_ = record.stats
        return record


class RandomAgent(_AgentBase):
    """Uniformly random actions; ``policy_`` is the (H, S, A) uniform table."""

    def __init__(self, eps=0.1, budget=1000, random_state=None):
        self.eps = eps
        self.budget = budget
        self.random_state = random_state

    def _fit_record(self, mdp, rng, seed):
        return baselines.run_random(mdp, self.eps, self.budget, rng=rng, seed=seed)


class CertaintyEquivalence(_AgentBase):
    """Greedy planning on the maximum-likelihood model, no exploration bonus."""

    def __init__(self, eps=0.1, budget=1000, random_state=None):
        self.eps = eps
        self.budget = budget
        self.random_state = random_state

    def _fit_record(self, mdp, rng, seed):
        return baselines.run_certainty_equivalence(mdp, self.eps, self.budget, rng=rng, seed=seed)
