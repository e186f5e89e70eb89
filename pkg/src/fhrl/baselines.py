"""Control agents logged in the same format as UCFH."""

from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .mdp import FixedHorizonMDP, GapEvaluator, optimal_values, sample_episode
from .records import ExperimentRecord
from .ucfh import ModelStats


def uniform_policy(mdp: FixedHorizonMDP) -> np.ndarray:
    """Stochastic (H, S, A) policy choosing every action with equal probability."""
    return np.full((mdp.horizon, mdp.num_states, mdp.num_actions), 1.0 / mdp.num_actions)


def mle_model(mdp: FixedHorizonMDP, counts: np.ndarray) -> FixedHorizonMDP:
    """Maximum-likelihood MDP from (S, A, S) transition counts.

    Unvisited pairs get the uniform distribution over their declared successors.
    """
    S, A = mdp.num_states, mdp.num_actions
    P = np.zeros((S, A, S))
    totals = counts.sum(axis=2)
    for s in range(S):
        for a in range(A):
            succ = list(mdp.successors[s][a])
            if totals[s, a] > 0:
                P[s, a, succ] = counts[s, a, succ] / totals[s, a]
            else:
                P[s, a, succ] = 1.0 / len(succ)
    return FixedHorizonMDP(mdp.rewards, P, mdp.start_dist, successors=mdp.successors)


def _summary(record, agent, seed, evaluate, t0, **extra):
    out = {
        "agent": agent,
        "seed": seed,
        "eps": record.eps,
        "episodes": len(record),
        "phases": len(record.phases),
        "mistakes": record.num_mistakes,
        "optimal_return": evaluate.optimal,
    }
    out.update(extra)
    out["wall_time"] = time.perf_counter() - t0
    return out


def run_random(
    env: FixedHorizonMDP,
    eps: float,
    episode_budget: int,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> ExperimentRecord:
    """Uniformly random actions at every step.

    The executed policy is the uniform stochastic policy, whose exact value
    (the mixture over actions) is logged as the per-episode value.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    t0 = time.perf_counter()
    evaluate = GapEvaluator(env)
    policy = uniform_policy(env)
    value, gap, gap_start = evaluate(policy)
    record = ExperimentRecord(eps=eps, agent="random", seed=seed)
    for _ in range(episode_budget):
        traj = sample_episode(env, policy, rng)
        record.append(1, traj.episode_return, value, gap, gap_start)
    if episode_budget:
        record.phases.append(
            {
                "phase": 1,
                "first_episode": 0,
                "num_episodes": episode_budget,
                "policy": policy.tolist(),
                "value": value,
                "gap": gap,
                "gap_start": gap_start,
                "update": None,
            }
        )
    record.final_policy = policy
    record.summary = _summary(record, "random", seed, evaluate, t0, final_gap=gap)
    return record


def run_certainty_equivalence(
    env: FixedHorizonMDP,
    eps: float,
    episode_budget: int,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> ExperimentRecord:
    """Plan greedily on the maximum-likelihood model after every episode.

    No exploration bonus: a new phase starts whenever the greedy policy changes.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    t0 = time.perf_counter()
    evaluate = GapEvaluator(env)
    stats = ModelStats.zeros(env.num_states, env.num_actions)
    _, policy = optimal_values(mle_model(env, stats.n_sas))
    record = ExperimentRecord(eps=eps, agent="certainty_equivalence", seed=seed)
    k = 0
    current = None
    for _ in range(episode_budget):
        if current is None or not np.array_equal(current, policy):
            k += 1
            current = policy
            value, gap, gap_start = evaluate(policy)
            record.phases.append(
                {
                    "phase": k,
                    "first_episode": len(record),
                    "num_episodes": 0,
                    "policy": policy.tolist(),
                    "n_sa": stats.n_sa.tolist(),
                    "value": value,
                    "gap": gap,
                    "gap_start": gap_start,
                    "update": None,
                }
            )
        traj = sample_episode(env, policy, rng)
        record.append(k, traj.episode_return, value, gap, gap_start)
        record.phases[-1]["num_episodes"] += 1
        for s, a, s_next in traj.transitions():
            stats.n_sa[s, a] += 1
            stats.n_sas[s, a, s_next] += 1
        _, policy = optimal_values(mle_model(env, stats.n_sas))
    record.stats = stats
    record.final_policy = policy
    record.summary = _summary(record, "certainty_equivalence", seed, evaluate, t0, final_gap=evaluate(policy)[1])
    return record
