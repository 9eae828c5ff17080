import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nondiv import exact_lattice as el
from nondiv.exact_lattice import canonicalize
from nondiv.matrix_groups import rotation
from nondiv.nondivergence import (InfiniteStableFamily, SubgroupSpec, TorusSource, delta,
                                  diagonal_torus, hypothesis_level, km_escape_experiment, l_P,
                                  sample_window, shortest_vector, stable_subspaces, unipotent_sl2)
from nondiv.reduction import lll, shortest_vector_enum


def rows(modules):
    return sorted(m.rows() for m in modules)


def test_stable_unipotent():
    st_ = stable_subspaces(unipotent_sl2())
    assert rows(st_.modules) == [[[0, 1]]] and st_.certified


def test_stable_torus_sl2():
    assert rows(stable_subspaces(diagonal_torus()).modules) == [[[0, 1]], [[1, 0]]]


def test_stable_torus_repeated_weight():
    st_ = stable_subspaces(diagonal_torus((1, 1, -2)))
    assert [[0, 0, 1]] in rows(st_.modules)
    assert [[1, 0, 0], [0, 1, 0]] in rows(st_.modules)
    assert not st_.certified
    assert [F.rows() for F in st_.infinite_families] == [[[1, 0, 0], [0, 1, 0]]]


def test_algebra_closure_detects_infinite_family():
    H = SubgroupSpec(3, [np.diag([1.0, 1.0, -2.0])], window=1.0)
    with pytest.raises(InfiniteStableFamily):
        stable_subspaces(H)


def test_explicit_list_is_validated():
    X = np.array([[0.0, 1.0], [0.0, 0.0]])
    ok = SubgroupSpec(2, [X], stable_source=[canonicalize([[0, 1]])])
    assert rows(stable_subspaces(ok).modules) == [[[0, 1]]]
    bad = SubgroupSpec(2, [X], stable_source=[canonicalize([[1, 0]])])
    with pytest.raises(ValueError):
        stable_subspaces(bad)


def test_subgroup_validation():
    X = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        SubgroupSpec(2, [X, 2 * X])
    with pytest.raises(ValueError):
        SubgroupSpec(2, [X], window=[(1.0, 0.0)])


def test_l_P_examples():
    g = np.diag([2.0, 0.5])
    assert l_P(g, canonicalize([[1, 0]])) == pytest.approx(2)
    assert l_P(g, canonicalize([[0, 1]])) == pytest.approx(0.5)
    assert l_P(np.array([[1.0, 1.0], [0.0, 1.0]]), canonicalize([[1, 1]])) == pytest.approx(math.sqrt(5))
    with pytest.raises(ValueError):
        l_P(g, canonicalize([[1, 0], [0, 1]]))
    with pytest.raises(ValueError):
        l_P(g, canonicalize([[2, 0]]))


def test_delta_examples():
    g = np.diag([2.0, 0.5])
    d = delta(g, diagonal_torus())
    assert d.value == pytest.approx(0.5) and d.certified
    assert delta(np.eye(2), diagonal_torus()).value == pytest.approx(1.0)
    assert delta(g, unipotent_sl2()).value == pytest.approx(2.0)
    assert hypothesis_level(g, unipotent_sl2()).value == pytest.approx(0.5)


def test_delta_uncertified_family():
    g = np.diag([0.1, 10.0, 1.0])
    d = delta(g, diagonal_torus((1, 1, -2)))
    assert not d.certified
    # upper bound is at most the best coordinate line of the family
    assert d.value <= min(el.covolume(canonicalize([[1, 0, 0]], 3), np.linalg.inv(g)),
                          el.covolume(canonicalize([[0, 1, 0]], 3), np.linalg.inv(g))) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_delta_equals_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = np.diag(np.exp(rng.normal(size=2) * [1, -1]))
    g[1, 1] = 1 / g[0, 0]
    H = diagonal_torus()
    gi = np.linalg.inv(g)
    brute = min(np.linalg.norm(np.array(v, dtype=float) @ gi) for v in ([1, 0], [0, 1]))
    assert delta(g, H).value == pytest.approx(brute)


def test_shortest_vector_examples():
    assert shortest_vector(np.eye(3)) == pytest.approx(1)
    assert shortest_vector(np.diag([math.exp(-2), math.exp(2)])) == pytest.approx(math.exp(-2))
    g = np.array([[1, 0.5], [0, 1]]) @ np.diag([0.1, 10])
    best = min(np.linalg.norm(np.array([a, b]) @ g)
               for a in range(-60, 61) for b in range(-3, 4) if a or b)
    assert shortest_vector(g) == pytest.approx(best)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 4))
def test_enumeration_matches_brute_force(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    B /= abs(np.linalg.det(B)) ** (1 / n)
    R, U = lll(B)
    assert np.allclose(U @ B, R) and round(abs(np.linalg.det(U))) == 1
    length, coeffs = shortest_vector_enum(B)
    assert np.linalg.norm(coeffs @ B) == pytest.approx(length)
    box = 3
    grid = np.array(np.meshgrid(*[range(-box, box + 1)] * n)).reshape(n, -1).T
    grid = grid[np.any(grid != 0, axis=1)]
    # brute force in the reduced basis, where short vectors have small coefficients
    assert length <= np.linalg.norm(grid @ R, axis=1).min() + 1e-9


def test_sample_window_deterministic():
    H = diagonal_torus()
    a, b = sample_window(H, 64, 3), sample_window(H, 64, 3)
    assert (a == b).all() and a.min() >= 0 and a.max() <= 1


def test_escape_identity():
    r = km_escape_experiment(unipotent_sl2(), np.eye(2), samples=200, threshold=0.1, seed=1)
    assert r.escape_fraction == 0
    # Z^2 o with o = u_{-s}, |s| <= 1: (1,0) o has length >= 1 and lambda_1 >= 1/sqrt(1+s^2)-type bound
    assert r.lambda1_min >= 1 / math.sqrt(2) - 1e-12


def test_escape_fixtures_small():
    T = 5.0
    H = diagonal_torus()
    r = km_escape_experiment(H, np.diag([math.exp(-T), math.exp(T)]), samples=500, seed=0)
    assert r.escape_fraction == 1.0 and r.delta_value <= math.exp(-4)
    r = km_escape_experiment(H, rotation(math.pi / 6), samples=500, threshold=0.05, seed=0)
    assert r.escape_fraction <= 0.05 and r.delta_value >= 0.5
    assert r.escapes == round(r.escape_fraction * r.samples)
    assert r.histogram_csv().startswith("bin_low,bin_high,count\n")
