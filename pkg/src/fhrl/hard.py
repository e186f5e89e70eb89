"""Hard instances: n parallel two-outcome bandits behind a uniform fan-out.

State layout: 0 is the start state, 1..n are the bandit states, n + 1 is the
rewarding absorbing state and n + 2 the non-rewarding one. Action 0 always
carries a bias of ``eps_prime / 2`` towards the rewarding state; under
hypothesis ``I_i = j >= 1`` action j of bandit i carries ``eps_prime``.
``I_i = 0`` means no action beats action 0.

An episode visits the start state at step 1, a bandit at step 2 and an
absorbing state for steps 3..H, so exactly H - 2 steps can earn reward.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .mdp import FixedHorizonMDP, evaluate_policy, optimal_values

BANDIT_STEP = 1  # zero-based timestep at which bandit states are visited


@dataclass(frozen=True)
class HardInstanceSpec:
    n: int
    num_actions: int
    eps_prime: float
    horizon: int
    hypotheses: tuple

    def __post_init__(self):
        object.__setattr__(self, "hypotheses", tuple(int(h) for h in self.hypotheses))
        errors = []
        if self.n < 1:
            errors.append("n must be at least 1")
        if self.num_actions < 2:
            errors.append("num_actions must be at least 2")
        if not 0 < self.eps_prime <= 0.25:
            errors.append(f"eps_prime must lie in (0, 1/4], got {self.eps_prime!r}")
        if self.horizon < 3:
            errors.append(f"horizon must be at least 3, got {self.horizon!r}")
        if len(self.hypotheses) != self.n:
            errors.append(f"expected {self.n} hypotheses, got {len(self.hypotheses)}")
        elif any(not 0 <= h < self.num_actions for h in self.hypotheses):
            errors.append(f"hypotheses must lie in 0..{self.num_actions - 1}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def num_states(self) -> int:
        return self.n + 3

    @property
    def plus(self) -> int:
        return self.n + 1

    @property
    def minus(self) -> int:
        return self.n + 2

    def bias(self, i: int) -> np.ndarray:
        """Per-action bias towards the rewarding state at bandit ``i`` (1-based state)."""
        b = np.zeros(self.num_actions)
        b[0] = self.eps_prime / 2
        h = self.hypotheses[i - 1]
        if h >= 1:
            b[h] = self.eps_prime
        return b

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "num_actions": self.num_actions,
            "eps_prime": self.eps_prime,
            "horizon": self.horizon,
            "hypotheses": list(self.hypotheses),
        }


def make_hard_mdp(spec: HardInstanceSpec) -> FixedHorizonMDP:
    n, A, H = spec.n, spec.num_actions, spec.horizon
    S = spec.num_states
    P = np.zeros((S, A, S))
    P[0, :, 1 : n + 1] = 1.0 / n
    for i in range(1, n + 1):
        b = spec.bias(i)
        P[i, :, spec.plus] = 0.5 + b
        P[i, :, spec.minus] = 0.5 - b
    P[spec.plus, :, spec.plus] = 1.0
    P[spec.minus, :, spec.minus] = 1.0
    succ = []
    for s in range(S):
        if s == 0:
            row = tuple(range(1, n + 1))
        elif s <= n:
            row = (spec.plus, spec.minus)
        else:
            row = (s,)
        succ.append((row,) * A)
    rewards = np.zeros((H, S))
    rewards[:, spec.plus] = 1.0
    start = np.zeros(S)
    start[0] = 1.0
    name = f"hard-n{n}-A{A}-H{H}-eps{spec.eps_prime:g}"
    return FixedHorizonMDP(rewards, P, start, successors=tuple(succ), name=name)


def sample_hypothesis(n: int, num_actions: int, include_zero: bool, rng: np.random.Generator) -> np.ndarray:
    if num_actions < 2:
        raise ValueError("num_actions must be at least 2")
    low = 0 if include_zero else 1
    return rng.integers(low, num_actions, size=n)


def eps_prime_for(eps: float, horizon: int, eta: float = 0.1) -> float:
    """Bias that makes eps-optimality require solving most bandits: 16 eps e^4 / ((H - 2) eta)."""
    return 16 * eps * math.e**4 / ((horizon - 2) * eta)


def optimal_arms(spec: HardInstanceSpec) -> np.ndarray:
    return np.array([int(np.argmax(spec.bias(i))) for i in range(1, spec.n + 1)])


@dataclass(frozen=True)
class BanditAccuracy:
    fraction: float
    gap_bound: float
    gap: float


def policy_bandit_accuracy(spec: HardInstanceSpec, policy) -> BanditAccuracy:
    """Share of bandits where ``policy`` picks the best arm at step 2.

    ``gap_bound`` is the lower bound ``(H - 2)(1 - fraction) eps_prime / 2``;
    ``gap`` is the exact suboptimality, ``(H - 2)`` times the average bias
    shortfall over bandits. The two agree when every wrong choice is action 0.
    """
    policy = np.asarray(policy)
    best = optimal_arms(spec)
    chosen = policy[BANDIT_STEP, 1 : spec.n + 1]
    solved = np.array([spec.bias(i)[chosen[i - 1]] == spec.bias(i)[best[i - 1]] for i in range(1, spec.n + 1)])
    fraction = float(solved.mean())
    shortfall = np.mean([spec.bias(i).max() - spec.bias(i)[chosen[i - 1]] for i in range(1, spec.n + 1)])
    steps = spec.horizon - 2
    return BanditAccuracy(fraction, steps * (1 - fraction) * spec.eps_prime / 2, float(steps * shortfall))


def hard_gap(spec: HardInstanceSpec, mdp: Optional[FixedHorizonMDP] = None, policy=None) -> float:
    """Exact optimal-minus-policy return by dynamic programming."""
    mdp = make_hard_mdp(spec) if mdp is None else mdp
    V_star, _ = optimal_values(mdp)
    return float(V_star[0, 0] - evaluate_policy(mdp, policy)[0, 0])


def save_hypothesis(spec: HardInstanceSpec, path, seed: Optional[int] = None) -> None:
    data = spec.to_dict()
    data["optimal_arms"] = optimal_arms(spec).tolist()
    data["seed"] = seed
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def load_hypothesis(path) -> HardInstanceSpec:
    data = json.loads(Path(path).read_text())
    return HardInstanceSpec(data["n"], data["num_actions"], data["eps_prime"], data["horizon"], data["hypotheses"])
