import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nondiv.exact_lattice import ExteriorVector
from nondiv.git_instability import (WeightedVector, contract_ratio, flag_cocharacter,
                                    generic_perturbation, invariant_threshold, invariant_vanish_test,
                                    stability_certificate, torus_instability, zero_weight_monomials)
from nondiv.matrix_groups import Cocharacter
from nondiv.parabolic import StandardParabolic, parabolic_from_cocharacter


def e(n, *idx, c=1):
    return ExteriorVector(n, len(idx), {tuple(sorted(i - 1 for i in idx)): Fraction(c)})


XY = {(1, 1): 1}


def test_invariant_vanish_examples():
    assert invariant_vanish_test(WeightedVector.from_coordinates(2, [1], [1, 0]), [XY])
    assert not invariant_vanish_test(WeightedVector.from_coordinates(2, [1], [1, 1]), [XY])
    assert invariant_vanish_test(WeightedVector.from_coordinates(2, [1], [0, 0]), [XY])


def test_zero_weight_monomials_sl2():
    mons = zero_weight_monomials([(1, 0), (0, 1)], 4)
    assert mons == [{(1, 1): 1}, {(2, 2): 1}]


def test_torus_instability_examples():
    assert torus_instability(WeightedVector.of(e(2, 1))).weights == (-1, 1)
    assert torus_instability(WeightedVector.of(e(2, 1, 2))) is None
    v = WeightedVector.of(e(2, 1), e(2, 2))
    assert torus_instability(v) is None
    cert = stability_certificate(v)
    assert cert.verify(2) and sorted(l for _, l in cert.coefficients) == [Fraction(1, 2)] * 2
    with pytest.raises(ValueError):
        torus_instability(WeightedVector.of(ExteriorVector(2, 1, {})))


def test_certificate_absent_when_unstable():
    assert stability_certificate(WeightedVector.of(e(3, 1), e(3, 1, 2))) is None


def _fixture_family():
    for coords in itertools.product((-1, 0, 1), repeat=4):
        if any(coords):
            yield WeightedVector.from_coordinates(2, [1, 1], list(coords))


def test_cross_validation_n2():
    v0 = next(_fixture_family())
    gens = zero_weight_monomials(v0.coordinate_weights(), 4)
    for v in _fixture_family():
        b = torus_instability(v)
        assert (b is not None) == invariant_vanish_test(v, gens)
        if b is not None:
            assert contract_ratio(v, b, 1e3) <= 1e-3
        else:
            assert stability_certificate(v).verify(2)


vectors3 = st.lists(st.integers(-2, 2), min_size=6, max_size=6).filter(any)


@settings(max_examples=60, deadline=None)
@given(vectors3, st.permutations(range(3)))
def test_permutation_equivariance(coords, perm):
    v = WeightedVector.from_coordinates(3, [1, 2], coords)
    # permuting basis vectors permutes the weights of every coordinate
    parts = []
    for p in v.parts:
        comps = {}
        for s, c in p.components.items():
            img = [perm[i] for i in s]
            sign = 1 if sum(1 for a, b in itertools.combinations(img, 2) if a > b) % 2 == 0 else -1
            comps[tuple(sorted(img))] = sign * c
        parts.append(ExteriorVector(3, p.degree, comps))
    w = WeightedVector(tuple(parts))
    b, c = torus_instability(v), torus_instability(w)
    assert (b is None) == (c is None)
    if b is not None:
        moved = [0] * 3
        for i in range(3):
            moved[perm[i]] = b.weights[i]
        # the permuted answer contracts the permuted vector
        assert all(sum(x * y for x, y in zip(wt, moved)) <= -1 for wt in w.weight_support())
        assert contract_ratio(w, c) <= 1e-3


@settings(max_examples=60, deadline=None)
@given(vectors3)
def test_returned_cocharacter_is_valid(coords):
    v = WeightedVector.from_coordinates(3, [1, 2], coords)
    b = torus_instability(v)
    if b is None:
        assert stability_certificate(v).verify(3)
    else:
        assert sum(b.weights) == 0
        assert all(b.pair(w) <= -1 for w in v.weight_support())


def E(n, i, j):
    X = np.zeros((n, n), dtype=int)
    X[i - 1, j - 1] = 1
    return X


def test_flag_cocharacter_examples():
    assert flag_cocharacter([E(2, 1, 2)]).weights == (-1, 1)
    b = flag_cocharacter([E(3, 1, 2), E(3, 1, 3), E(3, 2, 3)])
    assert b.weights == (-1, 0, 1)
    with pytest.raises(ValueError):
        flag_cocharacter([])
    with pytest.raises(ValueError):
        flag_cocharacter([E(2, 2, 1)])


@pytest.mark.parametrize("radical", [
    [(1, 2), (1, 3), (2, 3)],
    [(1, 3), (2, 3)],
    [(1, 2), (1, 3)],
    [(1, 3), (1, 4), (2, 3), (2, 4)],
])
def test_flag_cocharacter_sign_sanity(radical):
    n = max(max(p) for p in radical)
    b = flag_cocharacter([E(n, i, j) for i, j in radical])
    t = 1e3
    for i, j in radical:
        # Ad(diag(t^b)) scales E_ij by t^(b_i - b_j)
        assert t ** (b.weights[i - 1] - b.weights[j - 1]) <= 1e-3
        assert t ** (b.weights[j - 1] - b.weights[i - 1]) >= 1e3


def test_generic_perturbation():
    a = generic_perturbation(Cocharacter((1, 1, -2)))
    assert a.weights == (3, 1, -4)
    assert len(set(a.weights)) == 3
    assert generic_perturbation(Cocharacter((2, -1, -1))).weights == (4, -1, -3)
    assert generic_perturbation(Cocharacter((3, -1, -2))).weights == (3, -1, -2)
    assert generic_perturbation(Cocharacter((0, 0, 0))).weights == (2, 0, -2)
    P, _ = parabolic_from_cocharacter(a)
    assert P == StandardParabolic.borel(3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=2, max_size=5))
def test_generic_perturbation_refines(w):
    w = w[:-1] + [-sum(w[:-1])]
    a = generic_perturbation(Cocharacter(tuple(w))).weights
    assert len(set(a)) == len(a)
    assert all(a[i] > a[j] for i in range(len(w)) for j in range(len(w)) if w[i] > w[j])


def test_invariant_threshold():
    assert invariant_threshold([XY], 2) == 1
    assert invariant_threshold([{(1, 1): 2}], 1) == 2
    with pytest.raises(ValueError):
        invariant_threshold([], 1)
