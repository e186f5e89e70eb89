"""Fixed-horizon extended value iteration.

Each backup picks, within the per-successor hull bounds, the transition
vector that maximizes the expected next-step value: start every successor at
its lower bound and pour the remaining mass into successors in decreasing
order of value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .confidence import hull_table

FILL_EPS = 1e-14


class InfeasibleSetError(ValueError):
    """Hull bounds that cannot contain a probability vector."""


@dataclass(frozen=True)
class OptimisticPlan:
    """Result of optimistic planning.

    q_values : (H, S, A) optimistic action values.
    policy : (H, S) greedy actions, smallest index on ties.
    transitions : (H - 1, S, A, S) chosen transition kernels for steps 1..H-1;
        the kernel at the final step never affects values and is not stored.
    """

    q_values: np.ndarray
    policy: np.ndarray
    transitions: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.q_values.max(axis=2)


def greedy_redistribute(minima, maxima, order) -> np.ndarray:
    """Maximize a linear objective over a box-constrained probability simplex.

    ``order`` lists indices into ``minima``/``maxima`` from the most to the
    least valuable coordinate. Every coordinate starts at its minimum and the
    missing mass is added in that order up to each maximum.
    """
    minima = np.asarray(minima, dtype=float)
    maxima = np.asarray(maxima, dtype=float)
    if minima.shape != maxima.shape or np.any(minima > maxima):
        raise InfeasibleSetError("minima must not exceed maxima")
    total_min, total_max = minima.sum(), maxima.sum()
    if total_min > 1 + 1e-12 or total_max < 1 - 1e-12:
        raise InfeasibleSetError(
            f"no probability vector within bounds (sum of minima {total_min!r}, sum of maxima {total_max!r})"
        )
    p = minima.copy()
    deficit = 1.0 - total_min
    for i in order:
        if deficit <= FILL_EPS:
            break
        step = min(deficit, maxima[i] - p[i])
        p[i] += step
        deficit -= step
    if len(order):
        top = order[0]
        p[top] = min(max(p[top] + (1.0 - p.sum()), minima[top]), maxima[top])
    return p


def evi_from_hulls(rewards, successors, lower, upper) -> OptimisticPlan:
    """Extended value iteration given hull bounds per declared successor.

    rewards : (H, S) array.
    successors : ``successors[s][a]`` tuple of successor states.
    lower, upper : (S, A, S) arrays of hull bounds; only entries of declared
        successors are read.
    """
    rewards = np.asarray(rewards, dtype=float)
    H, S = rewards.shape
    A = len(successors[0])
    Q = np.zeros((H, S, A))
    Q[H - 1] = rewards[H - 1][:, None]
    policy = np.zeros((H, S), dtype=int)
    policy[H - 1] = np.argmax(Q[H - 1], axis=1)
    kernels = np.zeros((max(H - 1, 0), S, A, S))
    for t in range(H - 2, -1, -1):
        nxt = Q[t + 1][np.arange(S), policy[t + 1]]
        # stable sort: equal values keep ascending state order
        ranking = np.argsort(-nxt, kind="stable")
        rank_of = np.empty(S, dtype=int)
        rank_of[ranking] = np.arange(S)
        for s in range(S):
            for a in range(A):
                succ = np.asarray(successors[s][a])
                order = np.argsort(rank_of[succ], kind="stable")
                try:
                    p = greedy_redistribute(lower[s, a, succ], upper[s, a, succ], order)
                except InfeasibleSetError as exc:
                    raise InfeasibleSetError(f"(s={s}, a={a}) at step {t + 1}: {exc}") from None
                kernels[t, s, a, succ] = p
                Q[t, s, a] = rewards[t, s] + p @ nxt[succ]
        policy[t] = np.argmax(Q[t], axis=1)
    return OptimisticPlan(Q, policy, kernels)


def empirical_hulls(skeleton, stats, delta1: float):
    """Hull bounds of every (s, a, s') confidence set from committed counts."""
    S, A = skeleton.num_states, skeleton.num_actions
    n = stats.n_sa
    lower = np.zeros((S, A, S))
    upper = np.zeros((S, A, S))
    for s in range(S):
        for a in range(A):
            succ = list(skeleton.successors[s][a])
            count = int(n[s, a])
            if count == 0:
                lower[s, a, succ], upper[s, a, succ] = 0.0, 1.0
                continue
            p_hat = stats.n_sas[s, a, succ] / count
            lower[s, a, succ], upper[s, a, succ] = hull_table(p_hat, count, delta1)
    return lower, upper


def fixed_horizon_evi(skeleton, stats, delta1: float) -> OptimisticPlan:
    """Optimistic plan over the hulled confidence sets built from ``stats``.

    ``skeleton`` may be an :class:`~fhrl.mdp.MDPSkeleton` or a full MDP
    (its transitions are ignored).
    """
    lower, upper = empirical_hulls(skeleton, stats, delta1)
    return evi_from_hulls(skeleton.rewards, skeleton.successors, lower, upper)
