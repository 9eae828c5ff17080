"""Stable subspaces, the delta function and the shortest-vector escape experiment.

Conventions: lattices are row lattices ``Z^n @ x``; the subgroup H acts on
rational row vectors from the right, so W is H-stable when ``W @ h`` lies in
span W.  ``l_P(g, W)`` is the covolume of ``W @ g`` and

    delta(g, H) = min over H-stable W of l_P(g^-1, W).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from . import exact_lattice as el
from .exact_lattice import LatticeModule
from .matrix_groups import exact_inverse, exp_lie, is_exact, to_exact, to_float
from .reduction import lll, shortest_vector_enum

__all__ = [
    "SubgroupSpec",
    "TorusSource",
    "StableSubspaces",
    "InfiniteStableFamily",
    "DeltaResult",
    "EscapeReport",
    "stable_subspaces",
    "l_P",
    "delta",
    "hypothesis_level",
    "shortest_vector",
    "sample_window",
    "km_escape_experiment",
    "unipotent_sl2",
    "diagonal_torus",
]


class InfiniteStableFamily(ValueError):
    """The H-stable subspaces form an infinite family."""


@dataclass(frozen=True)
class TorusSource:
    weights: tuple[int, ...]


@dataclass
class SubgroupSpec:
    """H through its Lie algebra: samples are ``h0 @ exp(sum x_i X_i)``, x in the window.

    ``window`` is a list of ``(lo, hi)`` per basis element; a number ``c``
    means the box [-c, c]^d.  ``stable_source`` is a list of modules, a
    :class:`TorusSource`, or the string ``"algebra-closure"``.
    """

    n: int
    lie_basis: list
    h0: np.ndarray | None = None
    window: list | float = 1.0
    stable_source: object = "algebra-closure"

    def __post_init__(self):
        if isinstance(self.window, (int, float, Fraction)):
            self.window = [(-float(self.window), float(self.window))] * len(self.lie_basis)
        self.window = [(float(lo), float(hi)) for lo, hi in self.window]
        if len(self.window) != len(self.lie_basis):
            raise ValueError("window dimension does not match the Lie basis")
        if any(lo > hi for lo, hi in self.window):
            raise ValueError("empty window")
        if self.h0 is None:
            self.h0 = np.eye(self.n)
        if self.lie_basis:
            flat = np.array([to_float(x).ravel() for x in self.lie_basis])
            if np.linalg.matrix_rank(flat) < len(self.lie_basis):
                raise ValueError("Lie basis elements are linearly dependent")

    @property
    def dim(self) -> int:
        return len(self.lie_basis)

    def lie_element(self, x: Sequence[float]) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for c, X in zip(x, self.lie_basis):
            out = out + float(c) * to_float(X)
        return out

    def element(self, x: Sequence[float]) -> np.ndarray:
        """h0 @ exp(x . basis)."""
        return to_float(self.h0) @ exp_lie(self.lie_element(x))

    def exact_basis(self) -> list[np.ndarray]:
        return [to_exact(X, max_denominator=10**9) for X in self.lie_basis]


def unipotent_sl2(window=(0.0, 1.0)) -> SubgroupSpec:
    return SubgroupSpec(2, [np.array([[0.0, 1.0], [0.0, 0.0]])], window=[window],
                        stable_source="algebra-closure")


def diagonal_torus(weights=(1, -1), window=(0.0, 1.0)) -> SubgroupSpec:
    n = len(weights)
    return SubgroupSpec(n, [np.diag([float(w) for w in weights])], window=[window],
                        stable_source=TorusSource(tuple(weights)))


@dataclass
class StableSubspaces:
    modules: list[LatticeModule]
    infinite_families: list[LatticeModule] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.infinite_families


def _exact_rows_times(rows, X):
    n = len(X)
    return [[sum((Fraction(r[i]) * X[i][c] for i in range(n) if r[i]), Fraction(0))
             for c in range(n)] for r in rows]


def _integral_rows(rows) -> list[list[int]]:
    out = []
    for r in rows:
        d = 1
        for x in r:
            d = math.lcm(d, Fraction(x).denominator)
        out.append([int(Fraction(x) * d) for x in r])
    return out


def _span_module(rows, n) -> LatticeModule:
    rows = [r for r in _integral_rows(rows) if any(r)]
    if not rows:
        return LatticeModule(n)
    return el.saturate(el.canonicalize(rows, n))


def _is_invariant(W: LatticeModule, basis) -> bool:
    for X in basis:
        Xl = np.asarray(X, dtype=object).tolist()
        images = _exact_rows_times(W.rows(), Xl)
        if el.rational_rank(W.rows() + images) > W.rank:
            return False
    return True


def _algebra_basis(basis, n) -> list[list[list[Fraction]]]:
    """Basis of the unital associative algebra generated by the matrices."""
    gens = [np.asarray(X, dtype=object).tolist() for X in basis]
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    found: list = [ident]
    flat = [sum(ident, [])]
    frontier = [ident]
    while frontier:
        nxt = []
        for A in frontier:
            for X in gens:
                prod = [[sum((A[i][k] * X[k][j] for k in range(n)), Fraction(0))
                         for j in range(n)] for i in range(n)]
                cand = flat + [sum(prod, [])]
                if el.rational_rank(cand) > len(flat):
                    found.append(prod)
                    flat = cand
                    nxt.append(prod)
        frontier = nxt
    return found


def _rational_left_eigenvectors(X, n) -> list[list[Fraction]]:
    ev = np.linalg.eigvals(np.array([[float(v) for v in row] for row in X]))
    out = []
    for lam in np.unique(np.round(ev.real[np.abs(ev.imag) < 1e-9], 9)):
        lq = Fraction(float(lam)).limit_denominator(10**6)
        shifted = [[X[i][j] - (lq if i == j else 0) for j in range(n)] for i in range(n)]
        ints = _integral_rows(shifted)
        K = el.left_kernel(ints, n)
        out.extend([[Fraction(x) for x in k] for k in K])
    return out


def _cyclic_closure(H: SubgroupSpec, height: int, algebra, eigen) -> set[LatticeModule]:
    n = H.n
    found: set[LatticeModule] = set()
    cands = list(eigen)
    for v in itertools.product(range(-height, height + 1), repeat=n):
        if any(v) and math.gcd(*v) == 1 and next(x for x in v if x) > 0:
            cands.append([Fraction(x) for x in v])
    for v in cands:
        images = [[sum((v[i] * A[i][j] for i in range(n)), Fraction(0)) for j in range(n)]
                  for A in algebra]
        W = _span_module(images, n)
        if 0 < W.rank < n:
            found.add(W)
    # sums and intersections of invariant subspaces are invariant
    changed = True
    while changed:
        changed = False
        current = list(found)
        for A, B in itertools.combinations(current, 2):
            for W in (el.saturate(el.sum(A, B)), el.intersect(A, B)):
                if 0 < W.rank < n and W not in found:
                    found.add(W)
                    changed = True
    return found


def stable_subspaces(H: SubgroupSpec, max_height: int = 3) -> StableSubspaces:
    """Proper nonzero primitive H-stable sublattices.

    The algebra-closure route is a desk-scale search: cyclic submodules of
    rational eigenvectors and of all primitive vectors up to ``max_height``,
    closed under sums and intersections.  Growth between the last two
    heights is reported as an infinite family.
    """
    n = H.n
    src = H.stable_source
    if isinstance(src, TorusSource):
        w = list(src.weights)
        if len(w) != n:
            raise ValueError("torus weights do not match the dimension")
        distinct = sorted(set(w), key=w.index)
        spaces = {x: [i for i in range(n) if w[i] == x] for x in distinct}
        modules = []
        for r in range(1, len(distinct)):
            for combo in itertools.combinations(distinct, r):
                idx = sorted(i for x in combo for i in spaces[x])
                modules.append(el.canonicalize([[int(j == i) for j in range(n)] for i in idx], n))
        modules.sort(key=lambda M: (M.rank, M.basis))
        families = [el.canonicalize([[int(j == i) for j in range(n)] for i in spaces[x]], n)
                    for x in distinct if len(spaces[x]) >= 2]
        return StableSubspaces(modules, families)
    basis = H.exact_basis()
    if isinstance(src, (list, tuple)):
        mods = [M if isinstance(M, LatticeModule) else el.canonicalize(M, n) for M in src]
        for M in mods:
            if not (0 < M.rank < n):
                raise ValueError(f"{M} is not a proper nonzero subspace")
            if not el.is_primitive(M):
                raise ValueError(f"{M} is not primitive")
            if not _is_invariant(M, basis):
                raise ValueError(f"{M} is not invariant under the Lie basis")
        return StableSubspaces(sorted(mods, key=lambda M: (M.rank, M.basis)))
    if src != "algebra-closure":
        raise ValueError(f"unknown stable source {src!r}")
    algebra = _algebra_basis(basis, n)
    eigen = []
    for X in basis:
        eigen.extend(_rational_left_eigenvectors(np.asarray(X, dtype=object).tolist(), n))
    prev = _cyclic_closure(H, max_height - 1, algebra, eigen)
    last = _cyclic_closure(H, max_height, algebra, eigen)
    if last != prev:
        new = sorted(last - prev, key=lambda M: (M.rank, M.basis))
        raise InfiniteStableFamily(
            f"invariant subspaces keep appearing with height (e.g. {new[0]}, rank {new[0].rank}); "
            "supply an explicit list or a torus source")
    return StableSubspaces(sorted(last, key=lambda M: (M.rank, M.basis)))


def l_P(g, W: LatticeModule) -> float:
    if not (0 < W.rank < W.ambient_dim):
        raise ValueError("W must be a proper nonzero subspace")
    if not el.is_primitive(W):
        raise ValueError("W must be primitive")
    return el.covolume(W, g)


def _inverse(g):
    return exact_inverse(g) if is_exact(g) else np.linalg.inv(to_float(g))


@dataclass
class DeltaResult:
    value: float
    certified: bool
    minimizer: LatticeModule | None


def _family_candidates(F: LatticeModule, x) -> list[LatticeModule]:
    """Prefixes of an LLL-reduced basis of the translated family lattice F @ x."""
    rows = np.array(F.rows(), dtype=float)
    _, U = lll(rows @ to_float(x))
    red = (U @ np.array(F.rows(), dtype=np.int64)).tolist()
    out = []
    for k in range(1, F.rank):
        out.append(el.saturate(el.canonicalize(red[:k], F.ambient_dim)))
    return out


def _min_over_stable(x, H: SubgroupSpec) -> DeltaResult:
    stable = stable_subspaces(H)
    best, arg = math.inf, None
    for W in stable.modules:
        v = el.covolume(W, x)
        if v < best:
            best, arg = v, W
    for F in stable.infinite_families:
        for W in _family_candidates(F, x):
            v = el.covolume(W, x)
            if v < best:
                best, arg = v, W
    return DeltaResult(best, stable.certified, arg)


def delta(g, H: SubgroupSpec) -> DeltaResult:
    """min over H-stable W of ||W g^-1||.

    With an infinite family (repeated torus weights) the value is only an
    upper bound found by lattice reduction and ``certified`` is False.
    """
    return _min_over_stable(_inverse(g), H)


def hypothesis_level(g, H: SubgroupSpec) -> DeltaResult:
    """min over H-stable W of ||W g||, i.e. delta(g^-1, H)."""
    return _min_over_stable(g, H)


def shortest_vector(g) -> float:
    """lambda_1 of the row lattice Z^n @ g.

    Exact enumeration for n <= 4; above that the first LLL vector, which
    overestimates lambda_1 by at most a factor 2^((n-1)/2).
    """
    g = to_float(g)
    if g.shape[0] <= 4:
        return shortest_vector_enum(g)[0]
    R, _ = lll(g, delta=0.75)
    return float(np.linalg.norm(R[0]))


def sample_window(H: SubgroupSpec, samples: int, seed: int) -> np.ndarray:
    """Scrambled Halton points mapped onto the window box."""
    lo = np.array([w[0] for w in H.window])
    hi = np.array([w[1] for w in H.window])
    if H.dim == 0:
        return np.zeros((samples, 0))
    pts = qmc.Halton(d=H.dim, scramble=True, seed=np.random.default_rng(seed)).random(samples)
    return lo + pts * (hi - lo)


@dataclass
class EscapeReport:
    samples: int
    threshold: float
    escapes: int
    delta_value: float
    delta_certified: bool
    lambda1_min: float
    lambda1_max: float
    histogram: list[tuple[float, float, int]]

    @property
    def escape_fraction(self) -> float:
        return self.escapes / self.samples if self.samples else 0.0

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "threshold": self.threshold,
            "escapes": self.escapes,
            "escape_fraction": self.escape_fraction,
            "delta_value": self.delta_value,
            "delta_certified": self.delta_certified,
            "lambda1_min": self.lambda1_min,
            "lambda1_max": self.lambda1_max,
        }

    def histogram_csv(self) -> str:
        lines = ["bin_low,bin_high,count"]
        for lo, hi, c in self.histogram:
            lines.append(f"{lo:.17g},{hi:.17g},{c}")
        return "\n".join(lines) + "\n"


def _histogram(values: np.ndarray, bins: int = 20) -> list[tuple[float, float, int]]:
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        return [(lo, hi, int(values.size))]
    edges = np.geomspace(lo, hi, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


def km_escape_experiment(H: SubgroupSpec, g, gamma=None, samples: int = 10_000,
                         threshold: float = 0.1, seed: int = 0, threads: int = 1) -> EscapeReport:
    """Fraction of translated lattices Z^n gamma o gamma^-1 g with lambda_1 below threshold.

    The samples are ``o = (h0 exp(x))^-1`` with x quasi-uniform in the window.
    The reported delta is taken at ``g^-1 gamma h0``, the translate whose
    stable covolumes the sampled lattices see.
    """
    n = H.n
    g = to_float(g)
    gam = np.eye(n) if gamma is None else to_float(gamma)
    gam_inv = np.linalg.inv(gam)
    xs = sample_window(H, samples, seed)

    def lam(i: int) -> float:
        o = np.linalg.inv(H.element(xs[i]))
        return shortest_vector(gam @ o @ gam_inv @ g)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            lams = np.array(list(pool.map(lam, range(samples), chunksize=max(1, samples // (4 * threads)))))
    else:
        lams = np.array([lam(i) for i in range(samples)])
    d = delta(np.linalg.inv(g) @ gam @ to_float(H.h0), H)
    return EscapeReport(samples, threshold, int(np.sum(lams < threshold)), d.value, d.certified,
                        float(lams.min()), float(lams.max()), _histogram(lams))
