"""Elements of SL_n in an exact (Fraction) and a float layer.

Exact matrices are numpy object arrays of :class:`fractions.Fraction`; float
matrices are ordinary ``float64`` arrays.  ``to_exact``/``to_float`` move
between the two and every function preserves the layer of its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .exact_lattice import ExteriorVector, bareiss_det, rational_det, subsets

__all__ = [
    "Cocharacter",
    "is_exact",
    "to_exact",
    "to_float",
    "identity",
    "check_group_element",
    "exact_inverse",
    "exp_lie",
    "exterior_action",
    "apply_exterior",
    "cocharacter_at",
    "weight_support",
    "rotation",
]

FLOAT_DET_TOL = 1e-9


def is_exact(g) -> bool:
    arr = np.asarray(g)
    if arr.dtype != object:
        return False
    return all(isinstance(x, (int, Fraction)) for x in arr.ravel())


def to_exact(g, max_denominator: int | None = None) -> np.ndarray:
    """Object array of Fractions.  Floats convert exactly unless a denominator cap is given."""
    arr = np.asarray(g, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, str):
            f = Fraction(x)
        elif isinstance(x, (float, np.floating)):
            f = Fraction(float(x))
            if max_denominator is not None:
                f = f.limit_denominator(max_denominator)
        else:
            f = Fraction(x)
        out[idx] = f
    return out


def to_float(g) -> np.ndarray:
    return np.asarray(g, dtype=object).astype(float) if np.asarray(g).dtype == object \
        else np.asarray(g, dtype=float)


def identity(n: int, exact: bool = False) -> np.ndarray:
    if exact:
        return to_exact(np.eye(n, dtype=int))
    return np.eye(n)


def check_group_element(g) -> np.ndarray:
    """Validate a square matrix of determinant one in its layer and return it."""
    arr = np.asarray(g)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if is_exact(arr):
        d = rational_det(arr.tolist())
        if d != 1:
            raise ValueError(f"determinant {d} != 1")
        return arr
    arr = to_float(arr)
    d = np.linalg.det(arr)
    if abs(d - 1) > FLOAT_DET_TOL:
        raise ValueError(f"determinant {d!r} differs from 1 by more than {FLOAT_DET_TOL}")
    return arr


def exact_inverse(g) -> np.ndarray:
    A = [[Fraction(x) for x in row] for row in np.asarray(g, dtype=object).tolist()]
    n = len(A)
    M = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [x / p for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = M[i][n + j]
    return out


def exp_lie(x) -> np.ndarray:
    """Matrix exponential of a trace-zero matrix.

    Exact nilpotent input gives the exact (terminating) series; everything
    else goes through scipy's scaling-and-squaring Pade routine.
    """
    arr = np.asarray(x)
    n = arr.shape[0]
    if is_exact(arr):
        if sum(arr[i, i] for i in range(n)) != 0:
            raise ValueError("Lie algebra element must be trace-zero")
        power = identity(n, exact=True)
        total = identity(n, exact=True)
        for k in range(1, n + 1):
            power = power.dot(arr)
            if all(v == 0 for v in power.ravel()):
                return total
            total = total + power * Fraction(1, math.factorial(k))
        arr = to_float(arr)
    arr = np.asarray(arr, dtype=float)
    if abs(np.trace(arr)) > 1e-12 * max(1.0, np.abs(arr).max()):
        raise ValueError("Lie algebra element must be trace-zero")
    return scipy.linalg.expm(arr)


def _minor(g, rows, cols, exact):
    if exact:
        sub = [[g[i][j] for j in cols] for i in rows]
        return rational_det(sub)
    return np.linalg.det(g[np.ix_(rows, cols)])


def exterior_action(g, k: int) -> np.ndarray:
    """Matrix of g on the k-th exterior power: entry (I, J) is the minor det g[I, J].

    With row vectors, ``lambda @ exterior_action(g, k)`` is the wedge of the
    translated rows (Cauchy-Binet).
    """
    arr = np.asarray(g)
    n = arr.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"degree {k} outside 1..{n}")
    idx = subsets(n, k)
    exact = is_exact(arr)
    if exact:
        rows = arr.tolist()
        out = np.empty((len(idx), len(idx)), dtype=object)
        for a, I in enumerate(idx):
            for b, J in enumerate(idx):
                out[a, b] = _minor(rows, I, J, True)
        return out
    arr = np.asarray(arr, dtype=float)
    if k == 1:
        return arr.copy()
    out = np.empty((len(idx), len(idx)))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            out[a, b] = _minor(arr, list(I), list(J), False)
    return out


def apply_exterior(v: ExteriorVector, g) -> ExteriorVector:
    """Right action of g on an exterior vector."""
    idx = subsets(v.ambient_dim, v.degree)
    C = exterior_action(g, v.degree)
    if is_exact(C):
        vec = [Fraction(v.components.get(s, 0)) for s in idx]
        out = [sum((vec[a] * C[a, b] for a in range(len(idx)) if vec[a]), Fraction(0))
               for b in range(len(idx))]
    else:
        out = list(v.to_array() @ C)
    return ExteriorVector(v.ambient_dim, v.degree, dict(zip(idx, out)))


@dataclass(frozen=True)
class Cocharacter:
    weights: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(x) for x in self.weights)
        if any(int(x) != x for x in self.weights):
            raise ValueError("cocharacter weights must be integers")
        if sum(w) != 0:
            raise ValueError(f"cocharacter weights {w} do not sum to zero")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return len(self.weights)

    def __neg__(self) -> "Cocharacter":
        return Cocharacter(tuple(-w for w in self.weights))

    def pair(self, weight: Sequence[int]) -> int:
        return sum(int(a) * b for a, b in zip(weight, self.weights))

    @classmethod
    def parse(cls, text: str) -> "Cocharacter":
        return cls(tuple(int(x) for x in text.replace(" ", "").split(",") if x))


def cocharacter_at(a: Cocharacter, t) -> np.ndarray:
    """diag(t^w_1, ..., t^w_n); exact when ``t`` is an int or Fraction."""
    if t <= 0:
        raise ValueError("cocharacter parameter must be positive")
    if isinstance(t, (int, Fraction)) and not isinstance(t, bool):
        out = identity(a.dim, exact=True)
        for i, w in enumerate(a.weights):
            out[i, i] = Fraction(t) ** w
        return out
    return np.diag([float(t) ** w for w in a.weights])


def weight_support(v: ExteriorVector) -> list[tuple[int, ...]]:
    """0/1 indicator weights of the nonzero components of ``v``."""
    nz = v.nonzero()
    if not nz:
        raise ValueError("weight support of the zero vector")
    out = []
    for s in sorted(nz, key=lambda s: s[::-1]):
        out.append(tuple(int(i in s) for i in range(v.ambient_dim)))
    return out


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def integer_det(m) -> int:
    return bareiss_det([[int(x) for x in r] for r in np.asarray(m, dtype=object).tolist()])
