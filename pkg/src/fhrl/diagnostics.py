"""Importance / knownness categorization of state-action pairs.

Both quantities live on the grid {0, 1, 2, 4, 8, ...}. Importance rounds the
occupancy weight relative to ``w_min`` up to the grid; knownness rounds the
committed count relative to ``m * w`` down to it. Pairs of importance 0 are
inactive and left out of every category.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .mdp import occupancy_weights


def grid_ceil(x: float) -> float:
    """Smallest grid value >= x."""
    if x <= 0:
        return 0
    if x <= 1:
        return 1
    mant, exp = math.frexp(x)
    return 2 ** (exp - 1) if mant == 0.5 else 2**exp


def grid_floor(x: float) -> float:
    """Largest grid value <= x."""
    if x < 1:
        return 0
    _, exp = math.frexp(x)
    return 2 ** (exp - 1)


def importance(w: float, w_min: float) -> float:
    return grid_ceil(w / w_min)


def knownness(n: float, w: float, m: float) -> float:
    if w <= 0 or n <= 0:
        return 0
    return grid_floor(n / (m * w))


@dataclass(frozen=True)
class CategoryTable:
    weights: np.ndarray
    importance: np.ndarray
    knownness: np.ndarray
    counts: dict  # (kappa, iota) -> number of active pairs

    @property
    def active(self) -> np.ndarray:
        return self.importance > 0

    @property
    def flags(self) -> dict:
        """(kappa, iota) -> whether the category holds at most kappa pairs."""
        return {key: count <= key[0] for key, count in self.counts.items()}

    @property
    def balanced(self) -> bool:
        return all(self.flags.values())


def categorize(mdp, policy, stats, constants) -> CategoryTable:
    """Categorize every pair under ``policy`` using committed counts."""
    w = occupancy_weights(mdp, policy)
    n = np.asarray(stats.n_sa if hasattr(stats, "n_sa") else stats)
    S, A = w.shape
    iota = np.zeros((S, A))
    kappa = np.zeros((S, A))
    for s in range(S):
        for a in range(A):
            iota[s, a] = importance(w[s, a], constants.w_min)
            kappa[s, a] = knownness(n[s, a], w[s, a], constants.m_effective)
    counts = Counter(
        (float(kappa[s, a]), float(iota[s, a])) for s in range(S) for a in range(A) if iota[s, a] > 0
    )
    return CategoryTable(w, iota, kappa, dict(counts))
