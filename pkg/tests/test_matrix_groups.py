import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nondiv.exact_lattice import ExteriorVector
from nondiv.fuzz import random_sl, random_unimodular_rational
from nondiv.matrix_groups import (Cocharacter, check_group_element, cocharacter_at, exp_lie,
                                  exterior_action, is_exact, to_exact, weight_support)


def test_exp_lie_examples():
    assert np.allclose(exp_lie(np.zeros((3, 3))), np.eye(3))
    N = to_exact([[0, 1], [0, 0]])
    E = exp_lie(N)
    assert is_exact(E) and E.tolist() == [[1, 1], [0, 1]]
    D = exp_lie(np.diag([1.0, -1.0]))
    assert np.allclose(D, np.diag([math.e, 1 / math.e]), atol=1e-12)


def test_exp_lie_rejects_trace():
    with pytest.raises(ValueError):
        exp_lie(np.eye(2))


def test_exterior_action_examples():
    g = random_sl(3, np.random.default_rng(0))
    assert exterior_action(g, 3)[0, 0] == pytest.approx(1.0)
    d = to_exact([[2, 0], [0, "1/2"]])
    assert exterior_action(d, 1).tolist() == [[2, 0], [0, Fraction(1, 2)]]
    u = to_exact([[1, 1], [0, 1]])
    assert exterior_action(u, 1).tolist() == [[1, 1], [0, 1]]
    assert exterior_action(u, 2).tolist() == [[1]]
    with pytest.raises(ValueError):
        exterior_action(u, 3)


def test_cocharacter_examples():
    a = Cocharacter((1, -1))
    assert cocharacter_at(a, 2).tolist() == [[2, 0], [0, Fraction(1, 2)]]
    b = Cocharacter((1, 1, -2))
    assert cocharacter_at(b, 1).tolist() == np.eye(3, dtype=int).tolist()
    assert np.allclose(cocharacter_at(b, math.e), np.diag([math.e, math.e, math.e ** -2]))
    with pytest.raises(ValueError):
        cocharacter_at(a, 0)
    with pytest.raises(ValueError):
        Cocharacter((1, 1))
    assert Cocharacter.parse("2,-1,-1").weights == (2, -1, -1)


def test_weight_support_examples():
    assert weight_support(ExteriorVector(2, 1, {(0,): 1})) == [(1, 0)]
    assert weight_support(ExteriorVector(3, 2, {(0, 1): 1})) == [(1, 1, 0)]
    assert weight_support(ExteriorVector(2, 1, {(0,): 1, (1,): 1})) == [(1, 0), (0, 1)]
    with pytest.raises(ValueError):
        weight_support(ExteriorVector(2, 1, {}))


def test_group_element_validation():
    check_group_element(to_exact([[2, 1], [1, 1]]))
    with pytest.raises(ValueError):
        check_group_element(to_exact([[2, 0], [0, 1]]))
    with pytest.raises(ValueError):
        check_group_element(np.diag([1.0, 1.0 + 1e-6]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5), st.data())
def test_exterior_action_is_multiplicative(seed, n, data):
    k = data.draw(st.integers(1, n))
    rng = np.random.default_rng(seed)
    g, h = random_sl(n, rng), random_sl(n, rng)
    lhs = exterior_action(g @ h, k)
    rhs = exterior_action(g, k) @ exterior_action(h, k)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.abs(rhs).max())
    ge, he = random_unimodular_rational(n, rng), random_unimodular_rational(n, rng)
    assert (exterior_action(ge.dot(he), k) == exterior_action(ge, k).dot(exterior_action(he, k))).all()


@given(st.lists(st.integers(-3, 3), min_size=2, max_size=4).filter(lambda w: sum(w) == 0),
       st.fractions(Fraction(1, 5), 5), st.fractions(Fraction(1, 5), 5))
def test_cocharacter_homomorphism(w, t, s):
    a = Cocharacter(tuple(w))
    assert (cocharacter_at(a, t).dot(cocharacter_at(a, s)) == cocharacter_at(a, t * s)).all()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_exp_inverse(seed, n):
    x = np.random.default_rng(seed).normal(size=(n, n))
    x -= np.trace(x) / n * np.eye(n)
    assert np.allclose(exp_lie(x) @ exp_lie(-x), np.eye(n), atol=1e-9)
    assert np.linalg.det(exp_lie(x)) == pytest.approx(1.0, abs=1e-9)
