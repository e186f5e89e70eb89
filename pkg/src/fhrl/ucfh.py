"""UCFH: phase-based optimistic learning for fixed-horizon episodic MDPs.

Each phase plans optimistically on the committed counts, then samples
episodes with that policy until some state-action pair has gathered enough
new visits; exactly one such pair is committed and the agent replans.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .confidence import confidence_set
from .evi import OptimisticPlan, fixed_horizon_evi
from .mdp import FixedHorizonMDP, GapEvaluator, sample_episode
from .records import ExperimentRecord

logger = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


class ContractViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class UcfhConstants:
    eps: float
    delta: float
    num_states: int
    num_actions: int
    horizon: int
    max_successors: int
    w_min: float
    updates_per_pair: int
    u_max: int
    delta1: float
    m_theory: Optional[float]
    m_effective: float

    @property
    def trigger_floor(self) -> float:
        """Minimum pending visits m * w_min before a pair can be committed."""
        return self.m_effective * self.w_min

    @property
    def count_cap(self) -> float:
        """Pairs with at least |S| m H committed visits are never updated again."""
        return self.num_states * self.m_effective * self.horizon

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def theoretical_m(eps, delta, num_states, num_actions, horizon, max_successors) -> float:
    """Sample threshold m from the algorithm's constants (requires H >= 4)."""
    S, A, H, C = num_states, num_actions, horizon, max_successors
    loglog = math.log2(math.log2(H))
    return (
        512
        * loglog**2
        * C
        * H**2
        / eps**2
        * math.log2(8 * H**2 * S**2 / eps) ** 2
        * math.log(6 * S * A * C * math.log2(4 * S**2 * H**2 / eps) ** 2 / delta)
    )


def derive_constants(eps, delta, skeleton, m_override=None) -> UcfhConstants:
    """All derived UCFH constants for an MDP skeleton.

    ``m_override`` replaces the theoretical sample threshold, which is far
    too large for experiments of practical size. It is mandatory for H < 4,
    where the ``(log2 log2 H)^2`` factor vanishes or is undefined.
    """
    if not 0 < eps <= 1:
        raise ConfigurationError(f"eps must lie in (0, 1], got {eps!r}")
    if not 0 < delta <= 1:
        raise ConfigurationError(f"delta must lie in (0, 1], got {delta!r}")
    S, A, H, C = skeleton.num_states, skeleton.num_actions, skeleton.horizon, skeleton.max_successors
    w_min = eps / (4 * H * S)
    per_pair = math.ceil(math.log2(S * H / w_min))
    u_max = S * A * per_pair
    delta1 = delta / (2 * u_max * C)
    if H >= 4:
        m_theory = theoretical_m(eps, delta, S, A, H, C)
    elif m_override is None:
        raise ConfigurationError(
            f"horizon {H} < 4 makes the theoretical m degenerate; pass m_override"
        )
    else:
        m_theory = None
    if m_override is not None and not m_override > 0:
        raise ConfigurationError(f"m_override must be positive, got {m_override!r}")
    m_eff = float(m_override) if m_override is not None else m_theory
    return UcfhConstants(
        eps=eps,
        delta=delta,
        num_states=S,
        num_actions=A,
        horizon=H,
        max_successors=C,
        w_min=w_min,
        updates_per_pair=per_pair,
        u_max=u_max,
        delta1=delta1,
        m_theory=m_theory,
        m_effective=m_eff,
    )


@dataclass
class ModelStats:
    """Committed (``n``) and pending (``v``) visit counters.

    Per-successor counters are dense (S, A, S) arrays; entries outside the
    declared successor sets stay zero.
    """

    n_sa: np.ndarray
    v_sa: np.ndarray
    n_sas: np.ndarray
    v_sas: np.ndarray
    update_counts: np.ndarray
    num_updates: int = 0

    @classmethod
    def zeros(cls, num_states, num_actions):
        S, A = num_states, num_actions
        return cls(
            n_sa=np.zeros((S, A), dtype=np.int64),
            v_sa=np.zeros((S, A), dtype=np.int64),
            n_sas=np.zeros((S, A, S), dtype=np.int64),
            v_sas=np.zeros((S, A, S), dtype=np.int64),
            update_counts=np.zeros((S, A), dtype=np.int64),
        )

    def copy(self) -> "ModelStats":
        return ModelStats(
            self.n_sa.copy(),
            self.v_sa.copy(),
            self.n_sas.copy(),
            self.v_sas.copy(),
            self.update_counts.copy(),
            self.num_updates,
        )

    def observe(self, trajectory) -> None:
        """Add an episode's transitions to the pending counters (in place)."""
        for s, a, s_next in trajectory.transitions():
            self.v_sa[s, a] += 1
            self.v_sas[s, a, s_next] += 1

    def qualifying(self, constants: UcfhConstants) -> np.ndarray:
        """Mask of pairs meeting the update condition."""
        threshold = np.maximum(constants.trigger_floor, self.n_sa)
        return (self.v_sa >= threshold) & (self.n_sa < constants.count_cap)

    def empirical_model(self) -> np.ndarray:
        """Maximum-likelihood kernel from committed counts; unvisited rows are zero."""
        with np.errstate(invalid="ignore", divide="ignore"):
            p = self.n_sas / self.n_sa[..., None]
        return np.nan_to_num(p)


def update_model(stats: ModelStats, pair, constants: UcfhConstants) -> ModelStats:
    """Commit the pending counts of one qualifying pair; returns new stats."""
    s, a = pair
    if not stats.qualifying(constants)[s, a]:
        raise ContractViolation(
            f"pair (s={s}, a={a}) does not meet the update condition "
            f"(v={stats.v_sa[s, a]}, n={stats.n_sa[s, a]})"
        )
    out = stats.copy()
    out.n_sa[s, a] += out.v_sa[s, a]
    out.n_sas[s, a] += out.v_sas[s, a]
    out.v_sa[s, a] = 0
    out.v_sas[s, a] = 0
    out.update_counts[s, a] += 1
    out.num_updates += 1
    return out


@dataclass(frozen=True)
class PhaseState:
    k: int
    plan: OptimisticPlan
    snapshot: int  # stats.num_updates the plan was computed from


@dataclass
class PhaseOutcome:
    trajectories: list
    stats: ModelStats
    next_state: PhaseState
    pair: Optional[tuple]
    truncated: bool


def initial_phase(skeleton, stats: ModelStats, constants: UcfhConstants) -> PhaseState:
    plan = fixed_horizon_evi(skeleton, stats, constants.delta1)
    return PhaseState(1, plan, stats.num_updates)


def run_phase(
    state: PhaseState,
    stats: ModelStats,
    env: FixedHorizonMDP,
    rng: np.random.Generator,
    constants: UcfhConstants,
    max_episodes: Optional[int] = None,
) -> PhaseOutcome:
    """Execute one phase: sample until a pair qualifies, commit it, replan.

    The update condition is checked after every complete episode. When
    several pairs qualify, the lexicographically smallest is committed. If
    ``max_episodes`` runs out first the outcome is marked truncated and the
    plan is left unchanged.
    """
    if state.snapshot != stats.num_updates:
        raise ContractViolation("phase plan is stale with respect to the committed counts")
    stats = stats.copy()
    policy = state.plan.policy
    trajectories = []
    while max_episodes is None or len(trajectories) < max_episodes:
        traj = sample_episode(env, policy, rng)
        trajectories.append(traj)
        stats.observe(traj)
        hits = np.argwhere(stats.qualifying(constants))
        if hits.size:
            pair = (int(hits[0, 0]), int(hits[0, 1]))
            stats = update_model(stats, pair, constants)
            plan = fixed_horizon_evi(env.skeleton, stats, constants.delta1)
            return PhaseOutcome(trajectories, stats, PhaseState(state.k + 1, plan, stats.num_updates), pair, False)
    return PhaseOutcome(trajectories, stats, state, None, True)


def model_covered(env: FixedHorizonMDP, stats: ModelStats, delta1: float) -> bool:
    """Whether every true transition probability lies in its exact confidence set."""
    for s in range(env.num_states):
        for a in range(env.num_actions):
            n = int(stats.n_sa[s, a])
            if n == 0:
                continue
            for s_next in env.successors[s][a]:
                pset = confidence_set(stats.n_sas[s, a, s_next] / n, n, delta1)
                if env.transitions[s, a, s_next] not in pset:
                    return False
    return True


def run(
    env: FixedHorizonMDP,
    eps: float,
    delta: float,
    m_override: Optional[float] = None,
    episode_budget: int = 1000,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
    log_categories: bool = False,
) -> ExperimentRecord:
    """Run UCFH for ``episode_budget`` episodes and log every episode.

    Policies only change at phase boundaries, so each phase's policy is
    evaluated exactly once by dynamic programming.
    """
    if episode_budget < 0:
        raise ConfigurationError("episode_budget must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    constants = derive_constants(eps, delta, env.skeleton, m_override)
    evaluate = GapEvaluator(env)
    stats = ModelStats.zeros(env.num_states, env.num_actions)
    state = initial_phase(env.skeleton, stats, constants)
    initial_planned = float(env.start_dist @ state.plan.values[0])
    record = ExperimentRecord(eps=eps, agent="ucfh", seed=seed)
    truncated = False
    while len(record) < episode_budget:
        value, gap, gap_start = evaluate(state.plan.policy)
        phase_info = {
            "phase": state.k,
            "first_episode": len(record),
            "policy": state.plan.policy.tolist(),
            "n_sa": stats.n_sa.tolist(),
            "planned_value": float(env.start_dist @ state.plan.values[0]),
            "value": value,
            "gap": gap,
            "gap_start": gap_start,
            "covered": model_covered(env, stats, constants.delta1),
        }
        if log_categories:
            from .diagnostics import categorize

            table = categorize(env, state.plan.policy, stats, constants)
            phase_info["balanced"] = table.balanced
        outcome = run_phase(state, stats, env, rng, constants, episode_budget - len(record))
        for traj in outcome.trajectories:
            record.append(state.k, traj.episode_return, value, gap, gap_start)
        phase_info["num_episodes"] = len(outcome.trajectories)
        if outcome.pair is not None:
            s, a = outcome.pair
            event = {"episode": len(record) - 1, "phase": state.k, "s": s, "a": a, "n": int(outcome.stats.n_sa[s, a])}
            record.updates.append(event)
            phase_info["update"] = {"s": s, "a": a, "n": event["n"]}
        else:
            phase_info["update"] = None
        record.phases.append(phase_info)
        truncated = outcome.truncated
        stats, state = outcome.stats, outcome.next_state

    violations = int(np.sum(stats.update_counts > constants.updates_per_pair))
    if stats.num_updates > constants.u_max:
        violations += 1
    if violations:
        logger.error("update-count bound violated (%d violations)", violations)
    record.summary = {
        "agent": "ucfh",
        "seed": seed,
        "eps": eps,
        "delta": delta,
        "m_override": m_override,
        "episodes": len(record),
        "phases": len(record.phases),
        "mistakes": record.num_mistakes,
        "updates": int(stats.num_updates),
        "max_updates_per_pair": int(stats.update_counts.max()),
        "update_bound_violations": violations,
        "optimal_return": evaluate.optimal,
        "initial_planned_value": initial_planned,
        "final_gap": evaluate(state.plan.policy)[1],
        "truncated": truncated,
        "constants": constants.as_dict(),
        "wall_time": time.perf_counter() - t0,
    }
    record.stats = stats
    record.final_policy = state.plan.policy
    return record
