"""Exact integer sublattices of Z^n.

Lattices are sets of integer row vectors and a group element ``g`` acts on
the right, ``v -> v @ g``.  Every :class:`LatticeModule` stores its basis in
row-style Hermite normal form, so two modules generate the same subgroup
exactly when their ``basis`` tuples compare equal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LatticeModule",
    "ExteriorVector",
    "SubmodularityReport",
    "canonicalize",
    "hermite_form",
    "left_kernel",
    "sum",
    "intersect",
    "saturate",
    "is_primitive",
    "covolume",
    "covolume_squared",
    "submodularity_check",
    "lambda_vector",
    "subsets",
    "bareiss_det",
    "rational_det",
    "rational_rank",
]

_builtin_sum = sum


@dataclass(frozen=True)
class LatticeModule:
    ambient_dim: int
    basis: tuple[tuple[int, ...], ...] = ()

    @property
    def rank(self) -> int:
        return len(self.basis)

    def rows(self) -> list[list[int]]:
        return [list(r) for r in self.basis]

    def as_array(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((0, self.ambient_dim))
        return np.array(self.basis, dtype=float)

    def __repr__(self) -> str:
        return f"LatticeModule(n={self.ambient_dim}, basis={[list(r) for r in self.basis]})"


@dataclass(frozen=True)
class ExteriorVector:
    """A vector of the k-th exterior power of Q^n (or R^n).

    ``components`` maps sorted index tuples (0-based) to their coefficient;
    missing keys are zero.
    """

    ambient_dim: int
    degree: int
    components: dict

    def nonzero(self) -> dict:
        return {s: c for s, c in self.components.items() if c != 0}

    def is_zero(self) -> bool:
        return not self.nonzero()

    def to_array(self) -> np.ndarray:
        return np.array([float(self.components.get(s, 0))
                         for s in subsets(self.ambient_dim, self.degree)])

    def norm_squared(self):
        return _builtin_sum((c * c for c in self.components.values()), Fraction(0))

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_array()))


def subsets(n: int, k: int) -> list[tuple[int, ...]]:
    """k-subsets of range(n) in colexicographic order."""
    return sorted(itertools.combinations(range(n), k), key=lambda s: s[::-1])


# -- integer linear algebra ---------------------------------------------------

def _hnf_with_transform(rows: list[list[int]], n: int, track: bool):
    """Row-style HNF of ``rows`` together with the unimodular transform.

    Returns ``(H, U, r)`` with ``U @ rows == H``; the first ``r`` rows of ``H``
    are the canonical basis and rows ``r:`` of ``U`` span the integer left
    kernel.
    """
    A = [list(r) for r in rows]
    m = len(A)
    U = [[int(i == j) for j in range(m)] for i in range(m)] if track else None

    def swap(i, j):
        A[i], A[j] = A[j], A[i]
        if track:
            U[i], U[j] = U[j], U[i]

    def addmul(dst, src, q):
        # row[dst] -= q * row[src]
        if q == 0:
            return
        rs, rd = A[src], A[dst]
        for c in range(n):
            if rs[c]:
                rd[c] -= q * rs[c]
        if track:
            us, ud = U[src], U[dst]
            for c in range(m):
                if us[c]:
                    ud[c] -= q * us[c]

    def negate(i):
        A[i] = [-x for x in A[i]]
        if track:
            U[i] = [-x for x in U[i]]

    p = 0
    for col in range(n):
        if p >= m:
            break
        while True:
            nz = [i for i in range(p, m) if A[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][col]))
            if piv != p:
                swap(p, piv)
            clean = True
            for i in range(p + 1, m):
                if A[i][col]:
                    addmul(i, p, A[i][col] // A[p][col])
                    if A[i][col]:
                        clean = False
            if clean:
                break
        if A[p][col] == 0:
            continue
        if A[p][col] < 0:
            negate(p)
        for i in range(p):
            addmul(i, p, A[i][col] // A[p][col])
        p += 1
    return A, U, p


def hermite_form(rows: Sequence[Sequence[int]], n: int | None = None) -> list[list[int]]:
    rows = [[int(x) for x in r] for r in rows]
    if n is None:
        n = len(rows[0]) if rows else 0
    H, _, r = _hnf_with_transform(rows, n, track=False)
    return H[:r]


def left_kernel(rows: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Basis (HNF) of the integer vectors x with x @ rows == 0."""
    rows = [[int(x) for x in r] for r in rows]
    m = len(rows)
    if m == 0:
        return []
    if n == 0:
        return [[int(i == j) for j in range(m)] for i in range(m)]
    _, U, r = _hnf_with_transform(rows, n, track=True)
    return hermite_form(U[r:], m) if r < m else []


def canonicalize(rows: Iterable[Sequence[int]], n: int | None = None) -> LatticeModule:
    rows = [list(r) for r in rows]
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent row lengths {sorted(lengths)}")
    if n is None:
        if not rows:
            raise ValueError("ambient dimension required for an empty generating set")
        n = lengths.pop()
    elif rows and lengths.pop() != n:
        raise ValueError(f"rows do not have length {n}")
    for r in rows:
        for x in r:
            if isinstance(x, float) and not x.is_integer():
                raise ValueError(f"non-integer entry {x!r}")
            if isinstance(x, Fraction) and x.denominator != 1:
                raise ValueError(f"non-integer entry {x}")
    H = hermite_form([[int(x) for x in r] for r in rows], n)
    return LatticeModule(n, tuple(tuple(r) for r in H))


def _check_dims(A: LatticeModule, B: LatticeModule) -> None:
    if A.ambient_dim != B.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {A.ambient_dim} != {B.ambient_dim}")


def sum(A: LatticeModule, B: LatticeModule) -> LatticeModule:  # noqa: A001
    _check_dims(A, B)
    return canonicalize(A.rows() + B.rows(), A.ambient_dim)


def intersect(A: LatticeModule, B: LatticeModule) -> LatticeModule:
    _check_dims(A, B)
    n = A.ambient_dim
    if A.rank == 0 or B.rank == 0:
        return LatticeModule(n)
    stacked = A.rows() + [[-x for x in r] for r in B.rows()]
    K = left_kernel(stacked, n)
    # x @ A == y @ B for every kernel row (x, y)
    Arows = A.rows()
    gens = [[_builtin_sum(k[i] * Arows[i][c] for i in range(A.rank)) for c in range(n)]
            for k in K]
    return canonicalize(gens, n)


def saturate(A: LatticeModule) -> LatticeModule:
    n = A.ambient_dim
    if A.rank in (0, n):
        return A if A.rank == 0 else LatticeModule(n, tuple(
            tuple(int(i == j) for j in range(n)) for i in range(n)))
    # integer vectors orthogonal to A, then everything orthogonal to those
    transpose = [[A.basis[i][c] for i in range(A.rank)] for c in range(n)]
    K = left_kernel(transpose, A.rank)
    Kt = [[K[j][c] for j in range(len(K))] for c in range(n)]
    return canonicalize(left_kernel(Kt, len(K)), n)


def is_primitive(A: LatticeModule) -> bool:
    return saturate(A) == A


# -- exact determinants -------------------------------------------------------

def bareiss_det(M: Sequence[Sequence[int]]) -> int:
    """Fraction-free determinant of a square integer matrix."""
    A = [list(map(int, r)) for r in M]
    k = len(A)
    if k == 0:
        return 1
    sign, prev = 1, 1
    for i in range(k - 1):
        if A[i][i] == 0:
            for j in range(i + 1, k):
                if A[j][i] != 0:
                    A[i], A[j] = A[j], A[i]
                    sign = -sign
                    break
            else:
                return 0
        piv = A[i][i]
        for j in range(i + 1, k):
            for c in range(i + 1, k):
                A[j][c] = (A[j][c] * piv - A[j][i] * A[i][c]) // prev
        prev = piv
    return sign * A[-1][-1]


def _common_denominator(M) -> int:
    d = 1
    for row in M:
        for x in row:
            d = math.lcm(d, Fraction(x).denominator)
    return d


def rational_det(M) -> Fraction:
    M = [list(r) for r in M]
    if not M:
        return Fraction(1)
    D = _common_denominator(M)
    ints = [[int(Fraction(x) * D) for x in r] for r in M]
    return Fraction(bareiss_det(ints), D ** len(M))


def rational_rank(rows) -> int:
    A = [[Fraction(x) for x in r] for r in rows]
    if not A:
        return 0
    n = len(A[0])
    rank = 0
    for c in range(n):
        piv = next((i for i in range(rank, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(rank + 1, len(A)):
            if A[i][c]:
                f = A[i][c] / A[rank][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[rank])]
        rank += 1
    return rank


# -- covolumes ------------------------------------------------------------------

def _is_exact(g) -> bool:
    if g is None:
        return True
    arr = np.asarray(g, dtype=object)
    return all(isinstance(x, (int, Fraction)) and not isinstance(x, bool)
               for x in arr.ravel())


def _gram_det_exact(rows, g) -> Fraction:
    r = len(rows)
    if r == 0:
        return Fraction(1)
    if g is None:
        M = [list(row) for row in rows]
        D = 1
    else:
        D = _common_denominator(g)
        G = [[int(Fraction(x) * D) for x in row] for row in g]
        n = len(G)
        M = [[_builtin_sum(row[i] * G[i][c] for i in range(n) if row[i]) for c in range(n)]
             for row in rows]
    gram = [[_builtin_sum(a * b for a, b in zip(M[i], M[j])) for j in range(r)]
            for i in range(r)]
    return Fraction(bareiss_det(gram), D ** (2 * r))


def covolume_squared(A: LatticeModule | Sequence[Sequence], g=None) -> Fraction:
    """Exact squared covolume of ``rows @ g`` for rational ``g`` (None = identity).

    ``A`` may be a module or any list of rational rows (used for the
    non-integral translates appearing in the xi-chains).
    """
    rows = A.rows() if isinstance(A, LatticeModule) else [list(r) for r in A]
    if g is not None:
        g = [[Fraction(x) for x in row] for row in np.asarray(g, dtype=object).tolist()]
    if any(isinstance(x, Fraction) and x.denominator != 1 for r in rows for x in r):
        D = _common_denominator(rows)
        ints = [[int(Fraction(x) * D) for x in r] for r in rows]
        return _gram_det_exact(ints, g) / Fraction(D) ** (2 * len(rows))
    return _gram_det_exact([[int(x) for x in r] for r in rows], g)


def covolume(A: LatticeModule, g=None) -> float:
    """Covolume of ``A @ g`` inside its real span; rank 0 gives 1."""
    if A.rank == 0:
        return 1.0
    if _is_exact(g):
        return math.sqrt(covolume_squared(A, g))
    M = A.as_array() @ np.asarray(g, dtype=float)
    # |det R| of the QR factor is stabler than sqrt(det(M M^T))
    R = np.linalg.qr(M.T, mode="r")
    return float(abs(np.prod(np.diag(R))))


@dataclass(frozen=True)
class SubmodularityReport:
    lhs: float
    rhs: float
    lhs_squared: Fraction | None
    rhs_squared: Fraction | None
    holds: bool


def submodularity_check(A: LatticeModule, B: LatticeModule, g=None,
                        tol: float = 1e-9) -> SubmodularityReport:
    """Compare ||A||_g ||B||_g with ||A cap B||_g ||A + B||_g."""
    _check_dims(A, B)
    if not is_primitive(A) or not is_primitive(B):
        raise ValueError("submodularity inputs must be primitive")
    meet, join = intersect(A, B), sum(A, B)
    if _is_exact(g):
        ls = covolume_squared(A, g) * covolume_squared(B, g)
        rs = covolume_squared(meet, g) * covolume_squared(join, g)
        return SubmodularityReport(math.sqrt(ls), math.sqrt(rs), ls, rs, ls >= rs)
    lhs = covolume(A, g) * covolume(B, g)
    rhs = covolume(meet, g) * covolume(join, g)
    return SubmodularityReport(lhs, rhs, None, None, lhs >= rhs * (1 - tol))


def lambda_vector(A: LatticeModule) -> ExteriorVector:
    """Wedge of the basis rows, signed so the first nonzero minor is positive."""
    if A.rank == 0:
        raise ValueError("lambda_vector of the zero module")
    r, n = A.rank, A.ambient_dim
    comps = {}
    for cols in subsets(n, r):
        comps[cols] = bareiss_det([[row[c] for c in cols] for row in A.basis])
    first = next(v for v in comps.values() if v != 0)
    if first < 0:
        comps = {s: -v for s, v in comps.items()}
    return ExteriorVector(n, r, comps)
