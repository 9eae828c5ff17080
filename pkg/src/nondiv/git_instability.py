"""Torus instability at desk scale.

A vector in a sum of exterior powers of Q^n is unstable for the diagonal
torus of SL_n when some cocharacter b (integer weights summing to zero)
drives it to zero: diag(t^b) scales the component of weight w by
t^<w, b>, so we need <w, b> <= -1 on the whole support.  This is a linear
feasibility problem; infeasibility is certified by a convex combination of
support weights lying on the line R (1, ..., 1).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .exact_lattice import ExteriorVector, subsets
from .matrix_groups import Cocharacter, weight_support
from .parabolic import StandardParabolic, parabolic_from_cocharacter

__all__ = [
    "WeightedVector",
    "HullCertificate",
    "invariant_vanish_test",
    "zero_weight_monomials",
    "evaluate_polynomial",
    "torus_instability",
    "stability_certificate",
    "contract_ratio",
    "flag_cocharacter",
    "root_weights",
    "generic_perturbation",
    "invariant_threshold",
]

Polynomial = dict  # exponent tuple -> coefficient


@dataclass(frozen=True)
class WeightedVector:
    """Formal direct sum of exterior vectors over a common Q^n."""

    parts: tuple[ExteriorVector, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("a weighted vector needs at least one summand")
        if len({p.ambient_dim for p in self.parts}) != 1:
            raise ValueError("summands live in different ambient dimensions")

    @classmethod
    def of(cls, *parts: ExteriorVector) -> "WeightedVector":
        return cls(tuple(parts))

    @classmethod
    def from_coordinates(cls, n: int, degrees: Sequence[int], coords: Sequence) -> "WeightedVector":
        """Split a flat coordinate list into summands of the given degrees (colex order)."""
        parts, pos = [], 0
        for k in degrees:
            idx = subsets(n, k)
            chunk = coords[pos:pos + len(idx)]
            if len(chunk) != len(idx):
                raise ValueError("coordinate list too short for the stated degrees")
            parts.append(ExteriorVector(n, k, dict(zip(idx, chunk))))
            pos += len(idx)
        if pos != len(coords):
            raise ValueError("coordinate list too long for the stated degrees")
        return cls(tuple(parts))

    @property
    def n(self) -> int:
        return self.parts[0].ambient_dim

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.parts)

    def coordinates(self) -> list:
        out = []
        for p in self.parts:
            out.extend(p.components.get(s, 0) for s in subsets(p.ambient_dim, p.degree))
        return out

    def coordinate_weights(self) -> list[tuple[int, ...]]:
        out = []
        for p in self.parts:
            out.extend(tuple(int(i in s) for i in range(self.n))
                       for s in subsets(p.ambient_dim, p.degree))
        return out

    def weight_support(self) -> list[tuple[int, ...]]:
        seen: dict[tuple[int, ...], None] = {}
        for p in self.parts:
            if not p.is_zero():
                for w in weight_support(p):
                    seen.setdefault(w)
        return list(seen)

    def act(self, b: Cocharacter, t: float) -> np.ndarray:
        """Coordinates of diag(t^b) applied to the vector."""
        return np.array([float(c) * t ** b.pair(w)
                         for c, w in zip(self.coordinates(), self.coordinate_weights())])


def evaluate_polynomial(f: Polynomial, x: Sequence) -> Fraction:
    total = Fraction(0)
    for exps, coef in f.items():
        if len(exps) != len(x):
            raise ValueError("polynomial arity does not match the vector")
        term = Fraction(coef)
        for xi, e in zip(x, exps):
            if e:
                term *= Fraction(xi) ** e
        total += term
    return total


def invariant_vanish_test(v: WeightedVector, generators: Iterable[Polynomial]) -> bool:
    """True iff every generator vanishes at v (exact arithmetic)."""
    x = [Fraction(c) for c in v.coordinates()]
    return all(evaluate_polynomial(f, x) == 0 for f in generators)


def zero_weight_monomials(weights: Sequence[Sequence[int]], max_degree: int) -> list[Polynomial]:
    """Monomials of degree 1..max_degree whose total weight is a multiple of (1, ..., 1).

    These are exactly the monomials invariant under the diagonal torus of SL_n.
    """
    d = len(weights)
    n = len(weights[0]) if d else 0
    out = []
    for deg in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            tot = [sum(weights[j][i] for j in combo) for i in range(n)]
            if len(set(tot)) == 1:
                exps = [0] * d
                for j in combo:
                    exps[j] += 1
                out.append({tuple(exps): 1})
    return out


def _rationalize(x: np.ndarray, max_den: int = 10**6) -> list[Fraction]:
    return [Fraction(float(v)).limit_denominator(max_den) for v in x]


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _contracting(weights: Sequence[Sequence[int]], n: int) -> Cocharacter | None:
    """Least-L1 b with sum b = 0 and <w, b> <= -1 for all w, scaled to integers."""
    W = np.array(weights, dtype=float).reshape(-1, n)
    # variables (b, s) with -s <= b <= s; minimise sum s
    c = np.concatenate([np.zeros(n), np.ones(n)])
    A = [np.concatenate([w, np.zeros(n)]) for w in W]
    rhs = [-1.0] * len(W)
    for i in range(n):
        e = np.zeros(2 * n)
        e[i], e[n + i] = 1, -1
        A.append(e.copy())
        e[i] = -1
        A.append(e)
        rhs += [0.0, 0.0]
    A_eq = np.concatenate([np.ones(n), np.zeros(n)])[None, :]
    res = linprog(c, A_ub=np.array(A), b_ub=rhs, A_eq=A_eq, b_eq=[0.0],
                  bounds=[(None, None)] * (2 * n), method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    q = _rationalize(res.x[:n])
    D = _lcm(f.denominator for f in q)
    b = [int(f * D) for f in q]
    g = math.gcd(*b) if any(b) else 1
    # dividing by the gcd can break <= -1 only if some pairing is above -g
    if all(sum(wi * bi for wi, bi in zip(w, b)) <= -g for w in weights):
        b = [x // g for x in b]
    if sum(b) != 0 or any(sum(int(wi) * bi for wi, bi in zip(w, b)) > -1 for w in weights):
        raise RuntimeError("LP solution failed exact verification")
    return Cocharacter(tuple(b))


@dataclass(frozen=True)
class HullCertificate:
    """sum lambda_w w = c (1, ..., 1) with lambda >= 0 summing to 1: no cocharacter contracts."""

    coefficients: tuple[tuple[tuple[int, ...], Fraction], ...]
    level: Fraction

    def verify(self, n: int) -> bool:
        lam = [l for _, l in self.coefficients]
        if any(l < 0 for l in lam) or sum(lam) != 1:
            return False
        tot = [sum((l * w[i] for w, l in self.coefficients), Fraction(0)) for i in range(n)]
        return all(t == self.level for t in tot)


def stability_certificate(v: WeightedVector) -> HullCertificate | None:
    """Exact hull certificate of torus stability, or None when v is unstable."""
    supp = v.weight_support()
    if not supp:
        raise ValueError("zero vector")
    n, m = v.n, len(supp)
    # variables (lambda_1..m, c): sum lambda w - c 1 = 0, sum lambda = 1
    A_eq = np.zeros((n + 1, m + 1))
    for j, w in enumerate(supp):
        A_eq[:n, j] = w
    A_eq[:n, m] = -1
    A_eq[n, :m] = 1
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1
    res = linprog(np.zeros(m + 1), A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * m + [(None, None)], method="highs")
    if res.status != 0:
        return None
    lam = _rationalize(res.x[:m])
    tot = sum(lam)
    lam = [l / tot for l in lam]
    level = sum((l * w[0] for w, l in zip(supp, lam)), Fraction(0))
    cert = HullCertificate(tuple((w, l) for w, l in zip(supp, lam) if l), level)
    if not cert.verify(n):
        raise RuntimeError("hull certificate failed exact verification")
    return cert


def torus_instability(v: WeightedVector) -> Cocharacter | None:
    """A cocharacter b with <w, b> <= -1 on the support of v, or None if v is torus-stable."""
    if v.is_zero:
        raise ValueError("zero vector")
    return _contracting(v.weight_support(), v.n)


def contract_ratio(v: WeightedVector, b: Cocharacter, t: float = 1e3) -> float:
    """||diag(t^b) v|| / ||v||."""
    x = np.array([float(c) for c in v.coordinates()])
    return float(np.linalg.norm(v.act(b, t)) / np.linalg.norm(x))


def root_weights(X) -> list[tuple[int, ...]]:
    """Adjoint weights e_i - e_j of the nonzero entries of a square matrix."""
    X = np.asarray(X)
    n = X.shape[0]
    out = []
    for i in range(n):
        for j in range(n):
            if X[i, j] != 0:
                out.append(tuple(int(k == i) - int(k == j) for k in range(n)))
    return out


def flag_cocharacter(v_list: Sequence) -> Cocharacter:
    """A cocharacter contracting every matrix in ``v_list`` under the adjoint action.

    Each matrix must be strictly upper triangular (a standard unipotent radical).
    """
    if not v_list:
        raise ValueError("empty list: a proper parabolic needs a nonempty radical")
    mats = [np.asarray(X) for X in v_list]
    n = mats[0].shape[0]
    weights = []
    for X in mats:
        if X.shape != (n, n):
            raise ValueError("matrices of different sizes")
        if any(X[i, j] != 0 for i in range(n) for j in range(i + 1)):
            raise ValueError("input is not strictly upper triangular")
        weights.extend(root_weights(X))
    if not weights:
        raise ValueError("all inputs are zero")
    b = _contracting(weights, n)
    if b is None:
        raise ValueError("no common contracting cocharacter")
    P, perm = parabolic_from_cocharacter(-b)
    pos = {p: k for k, p in enumerate(perm)}
    blocks = P.block_index()
    for X in mats:
        for i in range(n):
            for j in range(n):
                if X[i, j] != 0 and not blocks[pos[i]] < blocks[pos[j]]:
                    raise AssertionError("contracting cocharacter disagrees with its parabolic")
    return b


def generic_perturbation(b: Cocharacter, P_target: StandardParabolic | None = None) -> Cocharacter:
    """K b + (n-1, n-3, ..., 1-n) for the least K >= 1 keeping b's strict order with distinct entries.

    The parabolic of the result is then a Borel subgroup inside that of b.
    """
    w = b.weights
    n = len(w)
    if len(set(w)) == n:
        out = b
    else:
        c = [n - 1 - 2 * i for i in range(n)]
        K = 1
        while True:
            a = [K * x + ci for x, ci in zip(w, c)]
            if len(set(a)) == n and all(a[i] > a[j] for i in range(n) for j in range(n)
                                        if w[i] > w[j]):
                break
            K += 1
        out = Cocharacter(tuple(a))
    if P_target is not None and parabolic_from_cocharacter(b)[0] != P_target:
        raise ValueError("the cocharacter does not define the target parabolic")
    return out


def invariant_threshold(generators: Sequence[Polynomial], bound: int) -> Fraction | None:
    """min over integral x with |x_i| <= bound, not killed by every generator, of max_f |f(x)|.

    Relative to the supplied generators; None when every vector is killed.
    """
    if not generators:
        raise ValueError("no generators")
    d = len(next(iter(generators[0])))
    best = None
    for x in itertools.product(range(-bound, bound + 1), repeat=d):
        val = max(abs(evaluate_polynomial(f, x)) for f in generators)
        if val and (best is None or val < best):
            best = val
    return best
