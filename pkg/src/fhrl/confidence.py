"""Per-transition confidence sets for Bernoulli parameters.

A set combines a Hoeffding/Bernstein distance bound around the empirical
probability with a band on the Bernoulli standard deviation
``sqrt(p (1 - p))``. The standard-deviation band is not convex, so the exact
set is stored as at most two closed intervals; planners only use its hull.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


def log_term(delta1: float) -> float:
    return math.log(6.0 / delta1)


def _check_args(p_hat, n, delta1):
    if not 0.0 < delta1 <= 1.0:
        raise ValueError(f"delta1 must lie in (0, 1], got {delta1!r}")
    if n < 0 or int(n) != n:
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    if n > 0 and not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0, 1], got {p_hat!r}")


def distance_radius(p_hat: float, n: int, delta1: float) -> float:
    """Allowed |p - p_hat|: minimum of the Hoeffding and Bernstein radii.

    The Bernstein radius has a ``1 / (n - 1)`` term and is treated as
    infinite for ``n = 1``.
    """
    L = log_term(delta1)
    hoeffding = math.sqrt(L / (2 * n))
    if n < 2:
        return hoeffding
    bernstein = math.sqrt(2 * p_hat * (1 - p_hat) * L / n) + 7 * L / (3 * (n - 1))
    return min(hoeffding, bernstein)


def std_radius(n: int, delta1: float) -> float:
    """Allowed deviation of sqrt(p (1 - p)) from its empirical value; needs n > 1."""
    return math.sqrt(2 * log_term(delta1) / (n - 1))


def _bernoulli_std(p):
    return math.sqrt(max(p * (1 - p), 0.0))


def _roots(level):
    """Solutions x <= y of x (1 - x) = level**2, for 0 <= level <= 1/2."""
    disc = math.sqrt(max(1.0 - 4.0 * level * level, 0.0))
    low = 2.0 * level * level / (1.0 + disc)  # cancellation-free form of (1 - disc) / 2
    return low, 1.0 - low


def in_confidence_set(p: float, p_hat: float, n: int, delta1: float, slack: float = 0.0) -> bool:
    """Evaluate the defining inequalities directly at ``p``."""
    if n == 0:
        return 0.0 <= p <= 1.0
    if abs(p - p_hat) > distance_radius(p_hat, n, delta1) + slack:
        return False
    if n > 1:
        gap = abs(_bernoulli_std(p) - _bernoulli_std(p_hat))
        if gap > std_radius(n, delta1) + slack:
            return False
    return True


@dataclass(frozen=True)
class ProbabilitySet:
    """Confidence set of one transition probability.

    ``intervals`` are sorted, disjoint closed intervals inside [0, 1].
    """

    p_hat: float
    n: int
    delta1: float
    intervals: Tuple[Tuple[float, float], ...]

    @property
    def hull(self) -> Tuple[float, float]:
        return self.intervals[0][0], self.intervals[-1][1]

    def __contains__(self, p) -> bool:
        return contains(self, p)


def confidence_set(p_hat: float, n: int, delta1: float) -> ProbabilitySet:
    """Exact confidence set for a transition seen ``n`` times with frequency ``p_hat``."""
    _check_args(p_hat, n, delta1)
    n = int(n)
    if n == 0:
        return ProbabilitySet(float(p_hat), 0, delta1, ((0.0, 1.0),))
    r = distance_radius(p_hat, n, delta1)
    lo, hi = max(0.0, p_hat - r), min(1.0, p_hat + r)
    if n == 1:
        return ProbabilitySet(p_hat, n, delta1, ((lo, hi),))

    b = std_radius(n, delta1)
    g = _bernoulli_std(p_hat)
    pieces = [(0.0, 1.0)]
    lower_level = g - b
    if lower_level > 0:
        # std >= lower_level keeps a middle interval
        pieces = [_roots(lower_level)]
    upper_level = g + b
    if upper_level < 0.5:
        # std <= upper_level removes a middle segment
        x1, x2 = _roots(upper_level)
        pieces = [(max(a, lo_), min(c, hi_)) for a, c in pieces for lo_, hi_ in ((0.0, x1), (x2, 1.0))]
    intervals = []
    for a, c in pieces:
        a, c = max(a, lo), min(c, hi)
        if a <= c:
            intervals.append((a, c))
    # p_hat always satisfies both conditions; guard against rounding at a root
    if not any(a <= p_hat <= c for a, c in intervals):
        intervals.append((p_hat, p_hat))
        intervals = _merge(intervals)
    return ProbabilitySet(p_hat, n, delta1, tuple(intervals))


def _merge(intervals):
    intervals = sorted(intervals)
    out = [list(intervals[0])]
    for a, c in intervals[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], c)
        else:
            out.append([a, c])
    return [tuple(x) for x in out]


def contains(pset: ProbabilitySet, p: float) -> bool:
    return any(a <= p <= c for a, c in pset.intervals)


def hull_bounds(pset: ProbabilitySet) -> Tuple[float, float]:
    """Convex hull ``(lo, hi)`` of the set; both ends belong to the set."""
    return pset.hull


def hull_table(p_hat: np.ndarray, n: np.ndarray, delta1: float):
    """Hull bounds for arrays of empirical probabilities sharing one delta1.

    ``n`` broadcasts against ``p_hat``. Returns ``(lo, hi)`` arrays.
    """
    p_hat, n = np.broadcast_arrays(np.asarray(p_hat, dtype=float), np.asarray(n))
    lo = np.empty(p_hat.shape)
    hi = np.empty(p_hat.shape)
    for idx in np.ndindex(p_hat.shape):
        lo[idx], hi[idx] = confidence_set(float(p_hat[idx]), int(n[idx]), delta1).hull
    return lo, hi
