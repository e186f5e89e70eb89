"""Brute-force reference computations, independent of the library's DP code."""

import itertools
import math

import numpy as np


def enumerate_trajectories(mdp, policy, start):
    """Yield (probability, rewards) for every state sequence from ``start``.

    Walks the full tree of successor states; rewards are collected per step.
    """
    H = mdp.horizon

    def walk(t, s, prob, rewards):
        rewards = rewards + [mdp.rewards[t, s]]
        if t == H - 1:
            yield prob, rewards
            return
        a = policy[t][s]
        for s_next in range(mdp.num_states):
            p = mdp.transitions[s, a, s_next]
            if p > 0:
                yield from walk(t + 1, s_next, prob * p, rewards)

    yield from walk(0, start, 1.0, [])


def return_moments(mdp, policy, start):
    """Mean and variance of the episode return by exhaustive enumeration."""
    mean = 0.0
    second = 0.0
    for prob, rewards in enumerate_trajectories(mdp, policy, start):
        g = sum(rewards)
        mean += prob * g
        second += prob * g * g
    return mean, second - mean * mean


def return_variance_about(mdp, policy, start, center):
    return sum(prob * (sum(r) - center) ** 2 for prob, r in enumerate_trajectories(mdp, policy, start))


def all_policies(horizon, num_states, num_actions):
    for flat in itertools.product(range(num_actions), repeat=horizon * num_states):
        yield np.array(flat).reshape(horizon, num_states)


def in_set_predicate(p, p_hat, n, delta1, slack=0.0):
    """Direct evaluation of the two confidence conditions at p.

    A positive ``slack`` loosens both inequalities, a negative one tightens them.
    """
    if n == 0:
        return True
    L = math.log(6 / delta1)
    radius = math.sqrt(L / (2 * n))
    if n > 1:
        radius = min(radius, math.sqrt(2 * p_hat * (1 - p_hat) * L / n) + 7 * L / (3 * (n - 1)))
        if abs(math.sqrt(p * (1 - p)) - math.sqrt(p_hat * (1 - p_hat))) > math.sqrt(2 * L / (n - 1)) + slack:
            return False
    return abs(p - p_hat) <= radius + slack


def box_simplex_max(values, lo, hi):
    """Maximum of sum(p * values) over lo <= p <= hi, sum(p) = 1, by vertex enumeration.

    An optimal vertex has at most one coordinate strictly inside its bounds;
    every choice of that coordinate and bound pattern for the rest is tried.
    """
    k = len(values)
    best = -math.inf
    for free in range(k):
        others = [i for i in range(k) if i != free]
        for pattern in itertools.product((0, 1), repeat=k - 1):
            p = np.zeros(k)
            for i, up in zip(others, pattern):
                p[i] = hi[i] if up else lo[i]
            p[free] = 1.0 - p[others].sum()
            if lo[free] - 1e-15 <= p[free] <= hi[free] + 1e-15:
                best = max(best, float(p @ values))
    return best


def exchange_optimal(p, values, lo, hi, tol=1e-12):
    """No mass can move from a lower-valued to a higher-valued coordinate."""
    k = len(p)
    for i in range(k):
        for j in range(k):
            if values[i] > values[j] + tol and p[i] < hi[i] - tol and p[j] > lo[j] + tol:
                return False
    return True
