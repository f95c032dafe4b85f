import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homtype import fixtures
from homtype.errors import (
    AsymmetricDistance,
    MalformedDocument,
    NegativeMass,
    NonpositiveRadius,
    ZeroDistanceDistinctPoints,
)
from homtype.shtspace import (
    ball,
    doubling_constant,
    enumerate_distinct_balls,
    geometric_doubling,
    geometric_doubling_bound,
    greedy_cover_count,
    verify_axioms,
)

from oracles import all_balls, doubling_brute, kappa_brute


def test_path4_constants(path4):
    assert path4.kappa == 1.0
    assert doubling_constant(path4) == 3.0


def test_one_point_constants():
    sp = fixtures.one_point()
    assert sp.kappa == 1.0 and sp.c_mu == 1.0
    assert geometric_doubling(sp) == (1.0, 1)


def test_three_point_kappa():
    sp = verify_axioms([[0, 1, 3], [1, 0, 1], [3, 1, 0]], [1, 1, 1])
    assert sp.kappa == pytest.approx(1.5)


def test_two_point_doubling():
    assert fixtures.two_point().c_mu == 2.0


def test_geometric_doubling_path4(path4):
    bound, empirical = geometric_doubling(path4)
    assert bound == 729.0
    assert empirical == 3
    assert greedy_cover_count(path4, 1, 2.0) == 3


def test_bound_formula():
    assert geometric_doubling_bound(2.0, 2.0) == pytest.approx(2.0**9)


@pytest.mark.parametrize("x, r, expected", [(0, 1.5, {0, 1}), (0, 1.0, {0}), (1, 3.5, {0, 1, 2, 3})])
def test_ball_membership_is_strict(path4, x, r, expected):
    assert ball(path4, x, r) == frozenset(expected)


def test_ball_rejects_nonpositive_radius(path4):
    with pytest.raises(NonpositiveRadius):
        ball(path4, 0, 0.0)


def test_distinct_balls_small():
    assert enumerate_distinct_balls(fixtures.one_point()) == [frozenset({0})]
    assert enumerate_distinct_balls(fixtures.two_point()) == [frozenset({0}), frozenset({1}), frozenset({0, 1})]


def test_distinct_balls_path4(path4):
    # {1, 2} is not a ball: B(1, r) jumps from {1} to {0, 1, 2}
    balls = enumerate_distinct_balls(path4)
    assert set(balls) == all_balls(path4)
    assert len(balls) == 9
    assert frozenset({1, 2}) not in balls


@pytest.mark.parametrize(
    "dist, mass, err",
    [
        ([[0, 0], [0, 0]], [1, 1], ZeroDistanceDistinctPoints),
        ([[0, 1], [2, 0]], [1, 1], AsymmetricDistance),
        ([[0, 1], [1, 0]], [1, -1], NegativeMass),
        ([[0, 1], [1, 0]], [1, 0], NegativeMass),
        ([[0, 1], [1, 0]], [1], MalformedDocument),
        ([[1, 1], [1, 0]], [1, 1], MalformedDocument),
    ],
)
def test_axiom_violations(dist, mass, err):
    with pytest.raises(err):
        verify_axioms(dist, mass)


def test_space_is_immutable(path4):
    with pytest.raises(ValueError):
        path4.dist[0, 1] = 5.0


@st.composite
def small_spaces(draw):
    n = draw(st.integers(1, 6))
    vals = draw(st.lists(st.floats(0.1, 10.0), min_size=n * n, max_size=n * n))
    d = np.array(vals).reshape(n, n)
    d = np.triu(d, 1)
    d = d + d.T
    mass = draw(st.lists(st.floats(0.1, 5.0), min_size=n, max_size=n))
    return d, np.array(mass)


@settings(max_examples=60, deadline=None)
@given(small_spaces())
def test_constants_match_brute_force(data):
    d, m = data
    sp = verify_axioms(d, m)
    assert sp.kappa == pytest.approx(kappa_brute(d), rel=1e-12)
    assert sp.c_mu == pytest.approx(doubling_brute(d, m), rel=1e-12)
    assert set(enumerate_distinct_balls(sp)) == all_balls(sp)


def test_rand2d_is_metric():
    sp = fixtures.rand2d(16, seed=3)
    assert sp.kappa == pytest.approx(1.0)
    assert math.isfinite(sp.c_mu) and sp.c_mu >= 1
