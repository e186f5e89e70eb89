import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhrl.confidence import (
    confidence_set,
    contains,
    distance_radius,
    hull_bounds,
    hull_table,
    in_confidence_set,
)

from oracles import in_set_predicate

GRID = np.linspace(0.0, 1.0, 2001)  # spacing 0.0005
SLACK = 1e-12


def _assert_matches_predicate(pset, points):
    for p in points:
        member = contains(pset, p)
        if member:
            assert in_set_predicate(p, pset.p_hat, pset.n, pset.delta1, SLACK), p
        else:
            assert not in_set_predicate(p, pset.p_hat, pset.n, pset.delta1, -SLACK), p


def test_no_data_is_unit_interval():
    pset = confidence_set(0.3, 0, 0.1)
    assert pset.intervals == ((0.0, 1.0),)
    assert hull_bounds(pset) == (0.0, 1.0)
    assert contains(pset, 0.37)


def test_grid_agreement_half():
    _assert_matches_predicate(confidence_set(0.5, 100, 0.1), GRID)


def test_large_n_at_zero():
    n, delta1 = 10**6, 0.05
    lo, hi = hull_bounds(confidence_set(0.0, n, delta1))
    assert lo == 0.0
    assert hi <= math.sqrt(math.log(6 / delta1) / (2 * n))


def test_huge_n_is_nearly_a_point():
    lo, hi = hull_bounds(confidence_set(0.5, 10**9, 0.1))
    assert hi - lo <= 1e-3
    assert lo <= 0.5 <= hi


def test_single_observation_uses_hoeffding_only():
    delta1 = 0.2
    r = math.sqrt(math.log(6 / delta1) / 2)
    assert distance_radius(0.5, 1, delta1) == pytest.approx(r)
    pset = confidence_set(1.0, 1, delta1)
    assert pset.intervals == ((max(0.0, 1.0 - r), 1.0),)


def test_upper_std_edge_trims_hull():
    # p_hat = 0 with many samples: the std band is tighter than the distance bound
    n, delta1 = 1000, 0.1
    lo, hi = confidence_set(0.0, n, delta1).hull
    assert hi < distance_radius(0.0, n, delta1)
    b = math.sqrt(2 * math.log(6 / delta1) / (n - 1))
    assert hi * (1 - hi) == pytest.approx(b * b, rel=1e-9)


@settings(max_examples=500, deadline=None)
@given(st.integers(2, 10**6), st.floats(0, 1), st.floats(1e-9, 1))
def test_set_is_a_single_interval(n, frac, delta1):
    # reaching across the excluded middle would need a distance radius of at
    # least the std radius, which never happens
    p_hat = round(frac * n) / n
    assert len(confidence_set(p_hat, n, delta1).intervals) == 1


def test_domain_errors():
    with pytest.raises(ValueError):
        confidence_set(1.5, 3, 0.1)
    with pytest.raises(ValueError):
        confidence_set(0.5, -1, 0.1)
    with pytest.raises(ValueError):
        confidence_set(0.5, 3, 0.0)
    with pytest.raises(ValueError):
        confidence_set(0.5, 2.5, 0.1)


def test_hull_matches_grid_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 500))
        k = int(rng.integers(0, n + 1))
        delta1 = float(rng.uniform(0.01, 1.0))
        pset = confidence_set(k / n, n, delta1)
        members = GRID[[in_set_predicate(p, k / n, n, delta1) for p in GRID]]
        lo, hi = pset.hull
        assert members.size > 0 or hi - lo < 0.0005
        if members.size:
            assert lo - SLACK <= members.min() <= lo + 0.0005
            assert hi - 0.0005 <= members.max() <= hi + SLACK
        _assert_matches_predicate(pset, GRID[::4])


def test_random_tuple_agreement():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        n = int(rng.integers(0, 2000))
        p_hat = int(rng.integers(0, n + 1)) / n if n else 0.0
        delta1 = float(rng.uniform(1e-4, 1.0))
        p = float(rng.random())
        pset = confidence_set(p_hat, n, delta1)
        if contains(pset, p):
            assert in_set_predicate(p, p_hat, n, delta1, SLACK)
        else:
            assert not in_set_predicate(p, p_hat, n, delta1, -SLACK)


def test_library_predicate_agrees_with_oracle():
    rng = np.random.default_rng(2)
    for _ in range(2000):
        n = int(rng.integers(0, 300))
        p_hat = float(rng.random())
        delta1 = float(rng.uniform(1e-3, 1.0))
        p = float(rng.random())
        assert in_confidence_set(p, p_hat, n, delta1) == in_set_predicate(p, p_hat, n, delta1)


@pytest.mark.parametrize("p_hat", [0.0, 0.01, 0.3, 0.5, 0.97, 1.0])
def test_width_non_increasing_in_n(p_hat):
    widths = []
    for j in range(1, 21):
        lo, hi = confidence_set(p_hat, 2**j, 0.1).hull
        widths.append(hi - lo)
    assert all(b <= a + 1e-15 for a, b in zip(widths, widths[1:]))


@pytest.mark.parametrize("p", [0.05, 0.5, 0.9])
@pytest.mark.parametrize("n", [10, 100, 1000])
def test_coverage(p, n):
    delta1, trials = 0.1, 10_000
    rng = np.random.default_rng(1000 * n + int(100 * p))
    ks = rng.binomial(n, p, size=trials)
    covered = sum(contains(confidence_set(k / n, n, delta1), p) for k in ks)
    floor = (1 - delta1) - 3 * math.sqrt(delta1 * (1 - delta1) / trials)
    assert covered / trials >= floor


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**7), st.floats(0, 1), st.floats(1e-6, 1))
def test_empirical_frequency_always_member(n, frac, delta1):
    p_hat = round(frac * n) / n
    pset = confidence_set(p_hat, n, delta1)
    assert p_hat in pset
    lo, hi = pset.hull
    assert 0.0 <= lo <= p_hat <= hi <= 1.0
    for (a, b), (c, d) in zip(pset.intervals, pset.intervals[1:]):
        assert a <= b < c <= d
    assert len(pset.intervals) <= 2


def test_hull_table_shape_and_values():
    p_hat = np.array([[0.0, 0.25], [0.5, 1.0]])
    lo, hi = hull_table(p_hat, 40, 0.1)
    assert lo.shape == hi.shape == (2, 2)
    for idx in np.ndindex(2, 2):
        assert (lo[idx], hi[idx]) == confidence_set(float(p_hat[idx]), 40, 0.1).hull
