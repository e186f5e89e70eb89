import math

import numpy as np
import pytest

from fhrl.hard import (
    BANDIT_STEP,
    HardInstanceSpec,
    eps_prime_for,
    hard_gap,
    load_hypothesis,
    make_hard_mdp,
    optimal_arms,
    policy_bandit_accuracy,
    sample_hypothesis,
    save_hypothesis,
)
from fhrl.mdp import evaluate_policy, optimal_values


def _spec(hyp=(1, 2, 3), A=4, eps_prime=0.2, H=6):
    return HardInstanceSpec(len(hyp), A, eps_prime, H, tuple(hyp))


def test_layout_and_rows():
    spec = _spec()
    mdp = make_hard_mdp(spec)
    assert mdp.num_states == spec.n + 3
    np.testing.assert_allclose(mdp.transitions.sum(axis=2), 1.0, atol=1e-15)
    np.testing.assert_allclose(mdp.transitions[0, :, 1:4], 1 / 3)
    assert mdp.start_dist[0] == 1.0
    assert np.all(mdp.rewards[:, spec.plus] == 1) and mdp.rewards.sum() == spec.horizon


def test_bandit_probabilities():
    spec = _spec(hyp=(2, 0, 1), eps_prime=0.2)
    P = make_hard_mdp(spec).transitions
    assert P[1, 0, spec.plus] == pytest.approx(0.6)
    assert P[1, 2, spec.plus] == pytest.approx(0.7)
    assert P[1, 1, spec.plus] == pytest.approx(0.5)
    np.testing.assert_allclose(P[2, :, spec.plus], [0.6, 0.5, 0.5, 0.5])


def test_successor_set_sizes():
    spec = _spec()
    mdp = make_hard_mdp(spec)
    sizes = [len(mdp.successors[s][0]) for s in range(mdp.num_states)]
    assert sizes == [3, 2, 2, 2, 1, 1]
    assert mdp.max_successors == 3


@pytest.mark.parametrize("hyp", [(1, 2, 1), (3, 3, 3), (2, 1, 3)])
def test_optimal_return_all_informative(hyp):
    spec = _spec(hyp, A=4, eps_prime=0.2, H=7)
    V, _ = optimal_values(make_hard_mdp(spec))
    assert V[0, 0] == pytest.approx((7 - 2) * (0.5 + 0.2), abs=1e-12)


def test_optimal_return_example():
    spec = HardInstanceSpec(3, 3, 0.1, 5, (1, 2, 1))
    assert optimal_values(make_hard_mdp(spec))[0][0, 0] == pytest.approx(1.8, abs=1e-12)


def test_all_zero_hypothesis():
    spec = _spec(hyp=(0, 0, 0), eps_prime=0.2, H=6)
    mdp = make_hard_mdp(spec)
    V, pi = optimal_values(mdp)
    assert V[0, 0] == pytest.approx(4 * (0.5 + 0.1), abs=1e-12)
    Q = mdp.rewards[BANDIT_STEP, 1:4, None] + mdp.transitions[1:4] @ V[BANDIT_STEP + 1]
    for row in Q:
        assert np.flatnonzero(row == row.max()).tolist() == [0]
    assert np.all(pi[BANDIT_STEP, 1:4] == 0)


def test_invalid_specs():
    with pytest.raises(ValueError):
        HardInstanceSpec(2, 3, 0.3, 6, (1, 1))  # eps_prime above 1/4
    with pytest.raises(ValueError):
        HardInstanceSpec(2, 3, 0.1, 2, (1, 1))  # horizon too short
    with pytest.raises(ValueError):
        HardInstanceSpec(2, 3, 0.1, 6, (1, 3))  # arm out of range
    with pytest.raises(ValueError):
        HardInstanceSpec(2, 3, 0.1, 6, (1,))  # wrong length


def test_sample_hypothesis_two_actions():
    assert np.all(sample_hypothesis(20, 2, False, np.random.default_rng(0)) == 1)


def test_sample_hypothesis_reproducible():
    a = sample_hypothesis(10, 5, True, np.random.default_rng(3))
    b = sample_hypothesis(10, 5, True, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("include_zero", [False, True])
def test_sample_hypothesis_uniform_marginal(include_zero):
    A, draws = 4, 10_000
    rng = np.random.default_rng(5)
    first = np.array([sample_hypothesis(3, A, include_zero, rng)[0] for _ in range(draws)])
    support = range(0 if include_zero else 1, A)
    p = 1 / len(support)
    sigma = math.sqrt(draws * p * (1 - p))
    for k in support:
        assert abs((first == k).sum() - draws * p) <= 3 * sigma
    assert set(first.tolist()) == set(support)


def test_eps_prime_helper():
    assert eps_prime_for(0.01, 12, 0.1) == pytest.approx(16 * 0.01 * math.e**4 / (10 * 0.1))


def test_optimal_policy_accuracy():
    spec = _spec((1, 2, 3))
    _, pi = optimal_values(make_hard_mdp(spec))
    acc = policy_bandit_accuracy(spec, pi)
    assert acc.fraction == 1.0 and acc.gap_bound == 0.0 and acc.gap == 0.0


def test_first_action_everywhere():
    spec = _spec((1, 2, 3), eps_prime=0.2, H=6)
    pi = np.zeros((6, spec.num_states), dtype=int)
    acc = policy_bandit_accuracy(spec, pi)
    assert acc.fraction == 0.0
    assert acc.gap_bound == pytest.approx(4 * 0.1, abs=1e-12)
    assert hard_gap(spec, policy=pi) == pytest.approx(4 * 0.2 / 2, abs=1e-12)


def test_partial_solution_gap_equals_bound():
    # wrong choices are all action 0, so the bound is tight
    spec = _spec((1, 2, 3, 1), eps_prime=0.2, H=8)
    best = optimal_arms(spec)
    pi = np.zeros((8, spec.num_states), dtype=int)
    pi[BANDIT_STEP, 1:3] = best[:2]
    acc = policy_bandit_accuracy(spec, pi)
    assert acc.fraction == 0.5
    assert hard_gap(spec, policy=pi) == pytest.approx(6 * 0.5 * 0.1, abs=1e-12)
    assert acc.gap == pytest.approx(acc.gap_bound, abs=1e-12)


def test_gap_decomposition_random_policies():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n, A, H = int(rng.integers(1, 5)), int(rng.integers(2, 5)), int(rng.integers(3, 9))
        spec = HardInstanceSpec(n, A, float(rng.uniform(0.01, 0.25)), H, sample_hypothesis(n, A, True, rng))
        pi = rng.integers(0, A, size=(H, spec.num_states))
        acc = policy_bandit_accuracy(spec, pi)
        assert hard_gap(spec, policy=pi) == pytest.approx(acc.gap, abs=1e-12)
        assert acc.gap >= acc.gap_bound - 1e-12


def test_only_bandit_step_matters():
    spec = _spec((2, 1, 3))
    mdp = make_hard_mdp(spec)
    rng = np.random.default_rng(1)
    base = rng.integers(0, 4, size=(6, spec.num_states))
    other = rng.integers(0, 4, size=(6, spec.num_states))
    other[BANDIT_STEP] = base[BANDIT_STEP]
    assert evaluate_policy(mdp, base)[0, 0] == pytest.approx(evaluate_policy(mdp, other)[0, 0], abs=1e-12)


def test_hypothesis_roundtrip(tmp_path):
    spec = _spec((3, 1, 2))
    path = tmp_path / "h.json"
    save_hypothesis(spec, path, seed=4)
    assert load_hypothesis(path) == spec


def test_distinct_hypotheses_give_distinct_instances():
    a = make_hard_mdp(_spec((1, 2, 3)))
    b = make_hard_mdp(_spec((1, 2, 2)))
    assert not np.array_equal(a.transitions, b.transitions)
