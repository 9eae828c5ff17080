"""Random exact instances: unimodular rational matrices and primitive module pairs."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import exact_lattice as el
from .exact_lattice import LatticeModule
from .parabolic import (Embedding, StandardParabolic, embedding_compatibility_check,
                        horospherical_decompose, relative_compatibility_check)
from .matrix_groups import Cocharacter

__all__ = [
    "random_unimodular_rational",
    "random_primitive",
    "random_sl",
    "random_composition",
    "FuzzReport",
    "fuzz_submodularity",
    "fuzz_roundtrip",
    "fuzz_relative",
    "fuzz_embedding",
]


def random_unimodular_rational(n: int, rng: np.random.Generator, steps: int | None = None,
                               max_den: int = 4, max_num: int = 3) -> np.ndarray:
    """Product of rational elementary matrices and a signed permutation; det exactly 1."""
    g = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for _ in range(steps if steps is not None else 2 * n):
        i, j = rng.choice(n, size=2, replace=False)
        c = Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_den + 1)))
        g[i] = [a + c * b for a, b in zip(g[i], g[j])]
    perm = rng.permutation(n)
    g = [g[p] for p in perm]
    sign = 1 if _perm_sign(perm) > 0 else -1
    g[0] = [sign * x for x in g[0]]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = g[i][j]
    return out


def _perm_sign(perm) -> int:
    perm, sign = list(perm), 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def random_primitive(n: int, rng: np.random.Generator, rank: int | None = None,
                     height: int = 3) -> LatticeModule:
    """Saturation of the span of random integer rows (retried until the rank is right)."""
    k = int(rng.integers(1, n)) if rank is None else rank
    while True:
        rows = rng.integers(-height, height + 1, size=(k, n)).tolist()
        M = el.canonicalize(rows, n)
        if M.rank == k:
            return el.saturate(M)


@dataclass
class FuzzReport:
    n: int
    pairs: int
    violations: int
    min_ratio: float
    equalities: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {"n": self.n, "pairs": self.pairs, "violations": self.violations,
                "min_ratio": self.min_ratio, "equalities": self.equalities,
                "passed": self.passed}


def fuzz_submodularity(n: int, pairs: int = 10_000, seed: int = 0, threads: int = 1) -> FuzzReport:
    """Exact check of ||A|| ||B|| >= ||A cap B|| ||A + B|| under random rational unimodular g."""
    if n < 2:
        raise ValueError("n must be at least 2")

    def one(i: int):
        rng = np.random.default_rng([seed, n, i])
        A, B = random_primitive(n, rng), random_primitive(n, rng)
        g = random_unimodular_rational(n, rng)
        r = el.submodularity_check(A, B, g)
        return r.lhs_squared, r.rhs_squared

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(one, range(pairs), chunksize=max(1, pairs // (8 * threads))))
    else:
        res = [one(i) for i in range(pairs)]
    bad = sum(1 for l, r in res if l < r)
    eq = sum(1 for l, r in res if l == r)
    ratio = min((math.sqrt(l / r) for l, r in res if r), default=math.inf)
    return FuzzReport(n, pairs, bad, float(ratio), eq)


def _haar_so(n: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))[None, :]
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def random_sl(n: int, rng: np.random.Generator, spread: float = 1.5) -> np.ndarray:
    """k1 diag(e^s) k2 with Haar k1, k2 in SO(n) and centred log singular values in [-spread, spread]."""
    s = rng.uniform(-spread, spread, size=n)
    s -= s.mean()
    return _haar_so(n, rng) @ np.diag(np.exp(s)) @ _haar_so(n, rng)


def random_composition(n: int, rng: np.random.Generator) -> StandardParabolic:
    """Standard parabolic with uniformly random cut points between 1..n-1."""
    cuts = [i for i in range(1, n) if rng.random() < 0.5]
    bounds = [0] + cuts + [n]
    return StandardParabolic(tuple(b - a for a, b in zip(bounds, bounds[1:])))


def fuzz_roundtrip(n: int, samples: int = 1000, seed: int = 0) -> float:
    """Largest reassembly error |u a m k - g| over random g and random standard parabolics."""
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng([seed, n, i])
        g = random_sl(n, rng)
        c = horospherical_decompose(g, random_composition(n, rng))
        worst = max(worst, float(np.abs(c.assemble() - g).max()))
    return worst


def fuzz_relative(n: int, samples: int = 1000, seed: int = 0) -> float:
    """Largest deviation of the relative-coordinate identities over random (g, P, I)."""
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng([seed, n, i, 1])
        g = random_sl(n, rng)
        P = random_composition(n, rng)
        I = [j + 1 for j in range(P.num_roots) if rng.random() < 0.5]
        worst = max(worst, relative_compatibility_check(g, P, I).max_deviation)
    return worst


def fuzz_embedding(embedding: Embedding, a: Cocharacter, samples: int = 100, seed: int = 0) -> float:
    """Largest deviation of the embedding identities over random g in SL_m."""
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng([seed, i, 2])
        g = random_sl(embedding.m, rng)
        worst = max(worst, embedding_compatibility_check(g, embedding, a).max_deviation)
    return worst
