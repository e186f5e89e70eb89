"""Tabular fixed-horizon MDPs and exact dynamic-programming evaluation.

Indexing is zero-based throughout: timestep ``t`` in ``0..H-1`` stands for the
decision step ``t + 1``; states and actions are ``0..|S|-1`` and ``0..|A|-1``.
Value tables have ``H + 1`` rows with the last row identically zero.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class MDPValidationError(ValueError):
    """Raised when an MDP (or its file form) violates a structural invariant.

    ``errors`` holds one human-readable line per violated check.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("invalid MDP:\n" + "\n".join(f"  - {e}" for e in self.errors))


@dataclass(frozen=True)
class MDPSkeleton:
    """The part of an MDP the learner knows: rewards, horizon and successor sets."""

    num_states: int
    num_actions: int
    horizon: int
    rewards: np.ndarray
    successors: tuple

    @property
    def max_successors(self) -> int:
        return max(len(succ) for row in self.successors for succ in row)


@dataclass(frozen=True, eq=False)
class FixedHorizonMDP:
    """Episodic MDP with time-dependent rewards and stationary transitions.

    Parameters
    ----------
    rewards : array of shape (H, S), entries in [0, 1]
    transitions : array of shape (S, A, S)
    start_dist : array of shape (S,)
    successors : optional nested sequence, ``successors[s][a]`` lists the
        declared successor states of ``(s, a)``. Defaults to the support of
        each transition row.
    """

    rewards: np.ndarray
    transitions: np.ndarray
    start_dist: np.ndarray
    successors: Optional[tuple] = None
    name: Optional[str] = None

    def __post_init__(self):
        rewards = np.array(self.rewards, dtype=float)
        transitions = np.array(self.transitions, dtype=float)
        start = np.array(self.start_dist, dtype=float)
        errors = _structural_errors(rewards, transitions, start)
        if errors:
            raise MDPValidationError(errors)
        S, A = transitions.shape[:2]
        if self.successors is None:
            succ = tuple(
                tuple(tuple(int(x) for x in np.flatnonzero(transitions[s, a] > 0)) for a in range(A))
                for s in range(S)
            )
        else:
            succ = _normalize_successors(self.successors, S, A)
        errors = _successor_errors(transitions, succ)
        if errors:
            raise MDPValidationError(errors)
        for arr in (rewards, transitions, start):
            arr.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "start_dist", start)
        object.__setattr__(self, "successors", succ)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def horizon(self) -> int:
        return self.rewards.shape[0]

    @property
    def max_successors(self) -> int:
        """C, the largest declared successor set."""
        return max(len(succ) for row in self.successors for succ in row)

    @property
    def skeleton(self) -> MDPSkeleton:
        return MDPSkeleton(self.num_states, self.num_actions, self.horizon, self.rewards, self.successors)

    @cached_property
    def _sampling_tables(self):
        # cumulative probabilities over declared successors, ascending state order
        cum = [
            [list(np.cumsum(self.transitions[s, a, list(succ)])) for a, succ in enumerate(row)]
            for s, row in enumerate(self.successors)
        ]
        start_cum = list(np.cumsum(self.start_dist))
        return cum, start_cum

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (
            f"FixedHorizonMDP{label}(S={self.num_states}, A={self.num_actions}, "
            f"H={self.horizon}, C={self.max_successors})"
        )


def _structural_errors(rewards, transitions, start):
    errors = []
    if rewards.ndim != 2:
        errors.append(f"rewards must be a 2-d (H x S) array, got shape {rewards.shape}")
    if transitions.ndim != 3 or transitions.shape[0] != transitions.shape[2]:
        errors.append(f"transitions must have shape (S, A, S), got {transitions.shape}")
    if start.ndim != 1:
        errors.append(f"start_dist must be 1-d, got shape {start.shape}")
    if errors:
        return errors
    H, S = rewards.shape
    if H < 1:
        errors.append("horizon must be at least 1")
    if transitions.shape[0] != S:
        errors.append(f"rewards cover {S} states but transitions cover {transitions.shape[0]}")
    if start.shape[0] != transitions.shape[0]:
        errors.append(f"start_dist has {start.shape[0]} entries, expected {transitions.shape[0]}")
    if transitions.shape[1] < 1:
        errors.append("at least one action is required")
    if errors:
        return errors
    if not np.all(np.isfinite(rewards)) or rewards.min() < 0 or rewards.max() > 1:
        errors.append("rewards must lie in [0, 1]")
    if not np.all(np.isfinite(transitions)) or transitions.min() < 0 or transitions.max() > 1:
        errors.append("transition probabilities must lie in [0, 1]")
    else:
        sums = transitions.sum(axis=2)
        for s, a in zip(*np.nonzero(np.abs(sums - 1) > ROW_SUM_TOL)):
            errors.append(f"transition row (s={s}, a={a}) sums to {sums[s, a]!r}, not 1")
    if not np.all(np.isfinite(start)) or start.min() < 0:
        errors.append("start_dist entries must be nonnegative")
    elif abs(start.sum() - 1) > ROW_SUM_TOL:
        errors.append(f"start_dist sums to {start.sum()!r}, not 1")
    return errors


def _normalize_successors(successors, S, A):
    if len(successors) != S or any(len(row) != A for row in successors):
        raise MDPValidationError([f"successor sets must be given for all {S}x{A} state-action pairs"])
    return tuple(tuple(tuple(sorted(int(x) for x in succ)) for succ in row) for row in successors)


def _successor_errors(transitions, successors):
    errors = []
    S = transitions.shape[0]
    for s, row in enumerate(successors):
        for a, succ in enumerate(row):
            if not succ:
                errors.append(f"successor set of (s={s}, a={a}) is empty")
                continue
            if len(set(succ)) != len(succ) or succ[0] < 0 or succ[-1] >= S:
                errors.append(f"successor set of (s={s}, a={a}) has invalid entries {list(succ)}")
                continue
            outside = np.ones(S, dtype=bool)
            outside[list(succ)] = False
            stray = np.flatnonzero(outside & (transitions[s, a] > 0))
            if stray.size:
                errors.append(
                    f"(s={s}, a={a}) moves to undeclared successors {stray.tolist()}"
                )
    return errors


# --------------------------------------------------------------------------- policies


def check_policy(mdp: FixedHorizonMDP, policy) -> np.ndarray:
    """Validate a deterministic (H, S) or stochastic (H, S, A) policy table."""
    policy = np.asarray(policy)
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    if policy.ndim == 2:
        if policy.shape != (H, S):
            raise ValueError(f"policy has shape {policy.shape}, expected {(H, S)}")
        if not np.issubdtype(policy.dtype, np.integer):
            if not np.all(policy == np.round(policy)):
                raise ValueError("deterministic policy entries must be integers")
            policy = policy.astype(int)
        if policy.min() < 0 or policy.max() >= A:
            raise ValueError(f"policy actions must lie in 0..{A - 1}")
        return policy
    if policy.ndim == 3:
        if policy.shape != (H, S, A):
            raise ValueError(f"stochastic policy has shape {policy.shape}, expected {(H, S, A)}")
        if policy.min() < 0 or np.any(np.abs(policy.sum(axis=2) - 1) > 1e-9):
            raise ValueError("stochastic policy rows must be probability vectors")
        return policy.astype(float)
    raise ValueError("policy must be a (H, S) action table or a (H, S, A) distribution table")


def _policy_kernel(mdp, policy, t):
    """Transition matrix P_t[s, s'] under the policy at timestep t."""
    if policy.ndim == 2:
        return mdp.transitions[np.arange(mdp.num_states), policy[t]]
    return np.einsum("sa,sap->sp", policy[t], mdp.transitions)


# --------------------------------------------------------------------------- evaluation


def evaluate_policy(mdp: FixedHorizonMDP, policy) -> np.ndarray:
    """Backward induction for a fixed policy.

    Returns the (H + 1, S) value table; row ``t`` is the expected reward
    collected from step ``t`` to the end of the episode.
    """
    policy = check_policy(mdp, policy)
    H = mdp.horizon
    V = np.zeros((H + 1, mdp.num_states))
    for t in range(H - 1, -1, -1):
        V[t] = mdp.rewards[t] + _policy_kernel(mdp, policy, t) @ V[t + 1]
    return V


def optimal_values(mdp: FixedHorizonMDP):
    """Optimal value table and a greedy nonstationary policy.

    Ties are broken towards the smallest action index.
    """
    H, S = mdp.horizon, mdp.num_states
    V = np.zeros((H + 1, S))
    policy = np.zeros((H, S), dtype=int)
    for t in range(H - 1, -1, -1):
        Q = mdp.rewards[t][:, None] + mdp.transitions @ V[t + 1]
        policy[t] = np.argmax(Q, axis=1)
        V[t] = Q[np.arange(S), policy[t]]
    return V, policy


def total_return(mdp: FixedHorizonMDP, policy) -> float:
    """Expected episode return from the start distribution."""
    return float(mdp.start_dist @ evaluate_policy(mdp, policy)[0])


def optimal_return(mdp: FixedHorizonMDP) -> float:
    return float(mdp.start_dist @ optimal_values(mdp)[0][0])


def occupancy_weights(mdp: FixedHorizonMDP, policy) -> np.ndarray:
    """Expected number of visits to each (s, a) within one episode.

    Computed by pushing the state distribution forward from ``start_dist``;
    the table sums to H.
    """
    policy = check_policy(mdp, policy)
    S, A = mdp.num_states, mdp.num_actions
    w = np.zeros((S, A))
    dist = mdp.start_dist.copy()
    for t in range(mdp.horizon):
        if policy.ndim == 2:
            np.add.at(w, (np.arange(S), policy[t]), dist)
        else:
            w += dist[:, None] * policy[t]
        dist = dist @ _policy_kernel(mdp, policy, t)
    return w


def local_variance(mdp: FixedHorizonMDP, policy, values: np.ndarray) -> np.ndarray:
    """Variance of the next-step value under each transition.

    Returns an (H, S, A) table whose entry ``[t, s, a]`` is the variance of
    ``values[t + 1][s']`` for ``s' ~ p(.|s, a)``. The last timestep is zero.
    """
    check_policy(mdp, policy)
    H = mdp.horizon
    P = mdp.transitions
    sigma2 = np.zeros((H, mdp.num_states, mdp.num_actions))
    for t in range(H):
        nxt = values[t + 1]
        mean = P @ nxt
        sigma2[t] = np.einsum("sap,sap->sa", P, (nxt[None, None, :] - mean[..., None]) ** 2)
    return sigma2


def value_variance(mdp: FixedHorizonMDP, policy) -> np.ndarray:
    """Variance of the episode return, by the variance Bellman recursion.

    Row ``t`` of the (H + 1, S) result holds the variance of the reward
    collected from step ``t`` onwards given the state at ``t``.
    """
    policy = check_policy(mdp, policy)
    V = evaluate_policy(mdp, policy)
    sigma2 = local_variance(mdp, policy, V)
    H, S = mdp.horizon, mdp.num_states
    out = np.zeros((H + 1, S))
    for t in range(H - 1, -1, -1):
        if policy.ndim == 2:
            local = sigma2[t][np.arange(S), policy[t]]
        else:
            # law of total variance over the action draw
            q = mdp.rewards[t][:, None] + mdp.transitions @ V[t + 1]
            local = np.einsum("sa,sa->s", policy[t], sigma2[t] + (q - V[t][:, None]) ** 2)
        out[t] = _policy_kernel(mdp, policy, t) @ out[t + 1] + local
    return out


def start_state(mdp: FixedHorizonMDP) -> int:
    """Most likely start state (smallest index on ties)."""
    return int(np.argmax(mdp.start_dist))


class GapEvaluator:
    """Exact suboptimality of policies on one MDP.

    Calling it returns ``(value, gap, gap_start)``: the policy's expected
    return under the start distribution, its shortfall from the optimum, and
    the shortfall measured from the most likely start state alone.
    """

    def __init__(self, mdp: FixedHorizonMDP):
        self.mdp = mdp
        V, _ = optimal_values(mdp)
        self.s0 = start_state(mdp)
        self.optimal = float(mdp.start_dist @ V[0])
        self.optimal_start = float(V[0, self.s0])

    def __call__(self, policy):
        V = evaluate_policy(self.mdp, policy)
        value = float(self.mdp.start_dist @ V[0])
        return value, self.optimal - value, self.optimal_start - float(V[0, self.s0])


# --------------------------------------------------------------------------- sampling


@dataclass(frozen=True)
class Trajectory:
    """One sampled episode.

    ``states`` has H + 1 entries: the H visited states plus the state reached
    by the last transition, which collects no reward but is counted by the
    learner's transition statistics.
    """

    states: tuple
    actions: tuple
    rewards: tuple

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))

    def transitions(self):
        return zip(self.states[:-1], self.actions, self.states[1:])


def _draw(cum, u):
    i = bisect.bisect_right(cum, u)
    return min(i, len(cum) - 1)


def sample_episode(mdp: FixedHorizonMDP, policy, rng: np.random.Generator) -> Trajectory:
    """Sample an episode by inverse-CDF draws over successors in ascending order.

    Consumes exactly H + 1 uniforms from ``rng``. A stochastic (H, S, A)
    policy consumes H additional uniforms for the action draws.
    """
    policy = np.asarray(policy)
    cum, start_cum = mdp._sampling_tables
    H = mdp.horizon
    u = rng.random(H + 1)
    s = _draw(start_cum, u[0])
    if policy.ndim == 3:
        ua = rng.random(H)
        action_cum = np.cumsum(policy, axis=2).tolist()
    states, actions, rewards = [s], [], []
    for t in range(H):
        if policy.ndim == 2:
            a = int(policy[t, s])
        else:
            a = _draw(action_cum[t][s], ua[t])
        rewards.append(float(mdp.rewards[t, s]))
        succ = mdp.successors[s][a]
        s = succ[_draw(cum[s][a], u[t + 1])]
        actions.append(a)
        states.append(s)
    return Trajectory(tuple(states), tuple(actions), tuple(rewards))


# --------------------------------------------------------------------------- generators


def random_mdp(
    num_states: int,
    num_actions: int,
    horizon: int,
    rng: np.random.Generator,
    num_successors: Optional[int] = None,
    start: Optional[int] = 0,
) -> FixedHorizonMDP:
    """Random MDP with Dirichlet(1) rows over random successor sets.

    ``start=None`` draws a random start distribution instead of a
    point mass.
    """
    S, A = num_states, num_actions
    C = S if num_successors is None else num_successors
    if not 1 <= C <= S:
        raise ValueError("num_successors must lie in 1..num_states")
    P = np.zeros((S, A, S))
    succ = []
    for s in range(S):
        row = []
        for a in range(A):
            idx = np.sort(rng.choice(S, size=C, replace=False))
            P[s, a, idx] = rng.dirichlet(np.ones(C))
            # Dirichlet rows are normalized to rounding; fold the residual in
            P[s, a, idx[-1]] += 1.0 - P[s, a, idx].sum()
            row.append(tuple(int(x) for x in idx))
        succ.append(tuple(row))
    rewards = rng.random((horizon, S))
    if start is None:
        p0 = rng.dirichlet(np.ones(S))
        p0[-1] += 1.0 - p0.sum()
    else:
        p0 = np.zeros(S)
        p0[start] = 1.0
    return FixedHorizonMDP(rewards, P, p0, successors=tuple(succ))


# --------------------------------------------------------------------------- file format


def mdp_to_dict(mdp: FixedHorizonMDP) -> dict:
    """Dense JSON-ready representation (successor sets stored explicitly)."""
    out = {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "horizon": mdp.horizon,
        "rewards": mdp.rewards.tolist(),
        "transitions": mdp.transitions.tolist(),
        "start_dist": mdp.start_dist.tolist(),
        "successor_sets": [[list(succ) for succ in row] for row in mdp.successors],
    }
    if mdp.name:
        out["name"] = mdp.name
    return out


def mdp_from_dict(data: dict) -> FixedHorizonMDP:
    """Build an MDP from its JSON form, reporting every problem found."""
    errors = []
    if not isinstance(data, dict):
        raise MDPValidationError(["top-level JSON value must be an object"])
    for key in ("num_states", "num_actions", "horizon", "rewards", "transitions", "start_dist"):
        if key not in data:
            errors.append(f"missing field '{key}'")
    if errors:
        raise MDPValidationError(errors)
    S, A, H = data["num_states"], data["num_actions"], data["horizon"]
    for key, val in (("num_states", S), ("num_actions", A), ("horizon", H)):
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            errors.append(f"'{key}' must be a positive integer, got {val!r}")
    if errors:
        raise MDPValidationError(errors)

    try:
        rewards = np.array(data["rewards"], dtype=float)
        start = np.array(data["start_dist"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MDPValidationError([f"rewards/start_dist are not numeric arrays: {exc}"]) from None
    if rewards.shape != (H, S):
        errors.append(f"'rewards' has shape {rewards.shape}, expected {(H, S)}")
    if start.shape != (S,):
        errors.append(f"'start_dist' has shape {start.shape}, expected {(S,)}")

    successors = data.get("successor_sets")
    raw = data["transitions"]
    if isinstance(raw, list) and raw and isinstance(raw[0], dict):
        P, sparse_succ, sparse_errors = _parse_sparse(raw, S, A)
        errors.extend(sparse_errors)
        if successors is None:
            successors = sparse_succ
    else:
        try:
            P = np.array(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise MDPValidationError(errors + [f"'transitions' is not a numeric array: {exc}"]) from None
        if P.shape != (S, A, S):
            errors.append(f"'transitions' has shape {P.shape}, expected {(S, A, S)}")
    if errors:
        raise MDPValidationError(errors)
    errors.extend(_structural_errors(rewards, P, start))
    if successors is not None:
        try:
            successors = _normalize_successors(successors, S, A)
        except MDPValidationError as exc:
            errors.extend(exc.errors)
        except (TypeError, ValueError):
            errors.append("'successor_sets' must be an S x A nested list of state indices")
        else:
            errors.extend(_successor_errors(P, successors))
    if errors:
        raise MDPValidationError(errors)
    return FixedHorizonMDP(rewards, P, start, successors=successors, name=data.get("name"))


_SUCCESSOR_KEYS = ("s_next", "s'", "s\u2032")


def _parse_sparse(entries, S, A):
    errors = []
    P = np.zeros((S, A, S))
    succ = [[[] for _ in range(A)] for _ in range(S)]
    seen = set()
    for i, entry in enumerate(entries):
        s, a = entry.get("s"), entry.get("a")
        if not isinstance(s, int) or not isinstance(a, int) or not (0 <= s < S and 0 <= a < A):
            errors.append(f"transitions[{i}]: invalid (s, a) = ({s!r}, {a!r})")
            continue
        if (s, a) in seen:
            errors.append(f"transitions[{i}]: duplicate entry for (s={s}, a={a})")
            continue
        seen.add((s, a))
        for j, item in enumerate(entry.get("successors", [])):
            nxt = next((item[k] for k in _SUCCESSOR_KEYS if k in item), None)
            p = item.get("p")
            if not isinstance(nxt, int) or not 0 <= nxt < S:
                errors.append(f"transitions[{i}].successors[{j}]: invalid successor {nxt!r}")
                continue
            if not isinstance(p, (int, float)) or isinstance(p, bool):
                errors.append(f"transitions[{i}].successors[{j}]: probability must be a number")
                continue
            P[s, a, nxt] += p
            succ[s][a].append(nxt)
    for s in range(S):
        for a in range(A):
            if (s, a) not in seen:
                errors.append(f"transitions: no entry for (s={s}, a={a})")
    return P, succ, errors


def load_mdp(path) -> FixedHorizonMDP:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MDPValidationError([f"{path}: not valid JSON ({exc})"]) from None
    return mdp_from_dict(data)


def save_mdp(mdp: FixedHorizonMDP, path) -> None:
    Path(path).write_text(json.dumps(mdp_to_dict(mdp), indent=1) + "\n")
