"""Quantitative nondivergence: the epsilon cascade, xi-chains and a brute-force verifier.

For every nonzero rational subspace W the claim under test is

    sup over x in the window of ||Lambda_W @ h0 exp(x) @ g|| >= eps_{dim W}

whenever ||Lambda_W @ g|| >= eta for every H-stable W.  The constants come
from the induction on dim W: delta_l from (C, alpha)-goodness, then
eps_l = min_k (Z0^(-n^2) delta_l^k eta)^(1/(k+1)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import exact_lattice as el
from .exact_lattice import LatticeModule, subsets
from .goodness import GoodnessParams
from .matrix_groups import exp_lie, identity, is_exact, to_exact, to_float
from .nondivergence import SubgroupSpec, hypothesis_level

__all__ = [
    "prop42_delta_l",
    "prop42_epsilon",
    "epsilon_cascade",
    "XiChain",
    "xi_chain",
    "sup_search_oracle",
    "primitive_modules",
    "primitive_line_count",
    "Prop42Report",
    "prop42_verify",
]


def _as_fraction(x):
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, (float, np.floating)) and math.isfinite(x):
        return Fraction(float(x))
    return None


def _root(q, r: int):
    """r-th root; exact when ``q`` is a Fraction whose root is rational."""
    if r == 1:
        return q
    if isinstance(q, Fraction) and q > 0:
        num, den = _iroot(q.numerator, r), _iroot(q.denominator, r)
        if num is not None and den is not None:
            return Fraction(num, den)
    return float(q) ** (1.0 / r)


def _iroot(m: int, r: int) -> int | None:
    c = round(m ** (1.0 / r))
    for cand in (c - 1, c, c + 1):
        if cand >= 0 and cand ** r == m:
            return cand
    return None


def prop42_delta_l(eps_prev, n: int, params: GoodnessParams):
    """eps_prev * (1/(2nC))^(1/alpha): the level below which at most 1/(2n) of the window lies."""
    if not eps_prev > 0:
        raise ValueError("eps_prev must be positive")
    e, C = _as_fraction(eps_prev), _as_fraction(params.C)
    a = Fraction(params.alpha).limit_denominator(10**6)
    if e is not None and C is not None and a.numerator == 1 and abs(float(a) - params.alpha) < 1e-15:
        return e * Fraction(1, 1) / (2 * n * C) ** a.denominator
    return float(eps_prev) * (1.0 / (2 * n * params.C)) ** (1.0 / params.alpha)


def prop42_epsilon(eta, n: int, Z0: int, delta_l, k_max: int | None = None, eps_prev=None):
    """min over k <= k_max of (Z0^(-n^2) delta_l^k eta)^(1/(k+1)), capped by eta and eps_prev.

    Exact (a Fraction) when the inputs are rational and every root is rational.
    """
    if k_max is None:
        k_max = n
    if not (eta > 0 and delta_l > 0 and Z0 >= 1 and k_max >= 0):
        raise ValueError("eta, delta_l must be positive, Z0 >= 1, k_max >= 0")
    e, d = _as_fraction(eta), _as_fraction(delta_l)
    exact = e is not None and d is not None
    if not exact:
        e, d = float(eta), float(delta_l)
    base = Fraction(1, Z0 ** (n * n)) if exact else float(Z0) ** -(n * n)
    terms = [_root(base * d ** k * e, k + 1) for k in range(k_max + 1)]
    out = min(terms + [e] + ([eps_prev] if eps_prev is not None else []))
    if any(isinstance(t, float) for t in terms) or isinstance(out, float):
        return float(out)
    return out


def epsilon_cascade(eta, n: int, Z0: int, params: GoodnessParams) -> list:
    """[eps_0, ..., eps_n] with eps_0 = min(1, eta)."""
    eps = [min(_as_fraction(eta) or float(eta), 1)]
    for _ in range(1, n + 1):
        d = prop42_delta_l(eps[-1], n, params)
        eps.append(prop42_epsilon(eta, n, Z0, d, n, eps_prev=eps[-1]))
    return eps


@dataclass
class XiChain:
    indices: list[int]
    modules: list[LatticeModule]          # Lambda_0 = Lambda_W, Lambda_i = Lambda_{W xi_i}
    meets: list[LatticeModule]            # Lambda'_i
    closure: LatticeModule
    Z0: int
    lhs_squared: object
    rhs_squared: object
    steps: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.lhs_squared >= self.rhs_squared and all(s[1] for s in self.steps)

    def to_json(self) -> dict:
        return {"chain": self.indices, "length": len(self.indices),
                "modules": [m.rows() for m in self.modules],
                "meets": [m.rows() for m in self.meets],
                "closure": self.closure.rows(), "Z0": self.Z0,
                "lhs_squared": str(self.lhs_squared), "rhs_squared": str(self.rhs_squared),
                "holds": self.holds}


def _rows_times(rows, X):
    return [[sum((Fraction(r[i]) * X[i, j] for i in range(len(r))), Fraction(0))
             for j in range(X.shape[1])] for r in rows]


def _module_of(rows, n) -> LatticeModule:
    D = 1
    for r in rows:
        for x in r:
            D = D * Fraction(x).denominator // math.gcd(D, Fraction(x).denominator)
    return el.saturate(el.canonicalize([[int(Fraction(x) * D) for x in r] for r in rows], n))


def _contains(V: LatticeModule, rows) -> bool:
    return el.rational_rank(V.rows() + [list(r) for r in rows]) == V.rank


def _is_stable(V: LatticeModule, Xi) -> bool:
    return all(_contains(V, _rows_times(V.rows(), X)) for X in Xi)


def default_Z0(Xi) -> int:
    """Least Z0 with Z0 * xi integral for every xi."""
    Z = 1
    for X in Xi:
        for x in X.ravel():
            d = Fraction(x).denominator
            Z = Z * d // math.gcd(Z, d)
    return Z


def xi_chain(W: LatticeModule, Xi: Sequence, g=None, Z0: int | None = None) -> XiChain:
    """Grow W + W xi_1 + ... greedily (first xi in list order) until it is Xi-stable.

    Every inequality of the telescoping argument is checked in squared form;
    with exact ``g`` (default identity) the comparison is exact.
    """
    n = W.ambient_dim
    if not el.is_primitive(W) or W.rank == 0:
        raise ValueError("W must be a nonzero primitive module")
    Xi = [to_exact(X) if not is_exact(X) else np.asarray(X, dtype=object) for X in Xi]
    if Z0 is None:
        Z0 = default_Z0(Xi)
    exact = g is None or is_exact(g)
    if g is None:
        g = identity(n, exact=True)

    def cov2(A):
        if exact:
            return el.covolume_squared(A, g)
        rows = np.array([[float(x) for x in r] for r in (A.rows() if isinstance(A, LatticeModule) else A)])
        if len(rows) == 0:
            return 1.0
        M = rows @ to_float(g)
        return float(np.linalg.det(M @ M.T))

    def geq(a, b):
        return a >= b if exact else a >= b * (1 - 1e-9)

    indices, modules, images = [], [W], [W.rows()]
    V = W
    for _ in range(len(Xi) * n + 1):
        if _is_stable(V, Xi):
            break
        pick = next((j for j, X in enumerate(Xi)
                     if not _contains(V, _rows_times(W.rows(), X))), None)
        if pick is None:
            raise ValueError("the running sum is not stable, yet every W xi already lies in it; "
                             "the given set is not a valid test set for stability")
        img = _rows_times(W.rows(), Xi[pick])
        indices.append(pick)
        images.append(img)
        modules.append(_module_of(img, n))
        V = _module_of(V.rows() + img, n)
    else:
        raise ValueError(f"stability not reached within {len(Xi) * n} steps")

    steps = []
    l = W.rank
    for img, M in zip(images[1:], modules[1:]):
        a, b = cov2(img), Fraction(1, Z0 ** (2 * l)) * cov2(M) if exact else cov2(M) / Z0 ** (2 * l)
        steps.append(("image", geq(a, b)))
    meets = []
    S = modules[0]
    for M in modules[1:]:
        meet, join = el.intersect(S, M), el.sum(S, M)
        meets.append(meet)
        steps.append(("submodular", geq(cov2(S) * cov2(M), cov2(meet) * cov2(join))))
        closed = el.saturate(join)
        steps.append(("saturate", geq(cov2(join), cov2(closed))))
        S = closed
    lhs = 1
    for img in images:
        lhs = lhs * cov2(img)
    scale = Fraction(1, Z0 ** (2 * n * n)) if exact else float(Z0) ** (-2 * n * n)
    rhs = scale * cov2(S)
    for m in meets:
        rhs = rhs * cov2(m)
    return XiChain(indices, modules, meets, S, Z0, lhs, rhs, steps)


def _grid(H: SubgroupSpec, resolution: int) -> np.ndarray:
    if H.dim == 0:
        return np.zeros((1, 0))
    axes = [np.linspace(lo, hi, resolution + 1) if hi > lo else np.array([lo])
            for lo, hi in H.window]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, H.dim)


def _translates(g, H: SubgroupSpec, resolution: int) -> np.ndarray:
    g = to_float(g)
    return np.array([H.element(x) @ g for x in _grid(H, resolution)])


def _sup_many(mats: np.ndarray, W: LatticeModule) -> float:
    B = np.array(W.rows(), dtype=float)
    P = np.einsum("kn,rnm->rkm", B, mats)
    G = np.einsum("rkm,rlm->rkl", P, P)
    return float(math.sqrt(max(np.linalg.det(G).max(), 0.0)))


def sup_search_oracle(g, H: SubgroupSpec, W: LatticeModule, grid_resolution: int = 1000) -> float:
    """Max over a regular grid (``grid_resolution`` intervals per axis) of ||Lambda_W @ h0 exp(x) @ g||.

    Doubling the resolution refines the grid, so the value never decreases.
    """
    if W.rank == 0:
        return 1.0
    return _sup_many(_translates(g, H, grid_resolution), W)


def _canonical_vectors(n: int, h: int):
    for v in itertools.product(range(-h, h + 1), repeat=n):
        nz = next((x for x in v if x), 0)
        if nz > 0 and math.gcd(*v) == 1:
            yield v


def primitive_modules(n: int, height: int, rank: int):
    """Every primitive module of the given rank spanned by vectors with entries in [-height, height]."""
    if not 1 <= rank <= n:
        raise ValueError("rank outside 1..n")
    if rank == n:
        yield el.canonicalize([[int(i == j) for j in range(n)] for i in range(n)], n)
        return
    vecs = list(_canonical_vectors(n, height))
    if rank == 1:
        for v in vecs:
            yield LatticeModule(n, (tuple(v),))
        return
    seen = set()
    for combo in itertools.combinations(vecs, rank):
        M = el.canonicalize(combo, n)
        if M.rank == rank and M not in seen and el.is_primitive(M):
            seen.add(M)
            yield M


def primitive_line_count(height: int) -> int:
    """Lines in Q^2 with a primitive generator of sup-norm <= height: 4 sum phi(k)."""
    def phi(k):
        return sum(1 for j in range(1, k + 1) if math.gcd(j, k) == 1)
    return 4 * sum(phi(k) for k in range(1, height + 1))


@dataclass
class Prop42Report:
    outcome: str                          # "pass", "fail" or "hypothesis-failed"
    eta: float
    hypothesis_level: float
    epsilons: list
    checked: dict = field(default_factory=dict)
    min_sup: float = math.inf
    argmin: LatticeModule | None = None
    counterexamples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"outcome": self.outcome, "eta": float(self.eta),
                "hypothesis_level": self.hypothesis_level,
                "epsilons": [float(e) for e in self.epsilons],
                "checked": {str(k): v for k, v in self.checked.items()},
                "min_sup": self.min_sup,
                "argmin": self.argmin.rows() if self.argmin is not None else None,
                "counterexamples": [{"W": W.rows(), "sup": s} for W, s in self.counterexamples[:20]]}


def prop42_verify(g, H: SubgroupSpec, eta, height_bound: int, params: GoodnessParams,
                  Z0: int = 1, grid_resolution: int = 1000) -> Prop42Report:
    """Check the nondivergence implication on every primitive W up to a height bound."""
    n = H.n
    level = hypothesis_level(g, H).value
    eps = epsilon_cascade(eta, n, Z0, params)
    report = Prop42Report("pass", eta, level, eps)
    if level < float(eta) * (1 - 1e-12):
        report.outcome = "hypothesis-failed"
        return report
    mats = _translates(g, H, grid_resolution)
    for r in range(1, n + 1):
        mods = list(primitive_modules(n, height_bound, r))
        report.checked[r] = len(mods)
        if r == 1:
            V = np.array([M.rows()[0] for M in mods], dtype=float)
            sups = np.linalg.norm(np.einsum("ln,rnm->rlm", V, mats), axis=2).max(axis=0)
        else:
            sups = np.array([_sup_many(mats, M) for M in mods])
        for M, s in zip(mods, sups):
            s = float(s)
            if s < report.min_sup:
                report.min_sup, report.argmin = s, M
            if s < float(eps[r]):
                report.counterexamples.append((M, s))
    if report.counterexamples:
        report.outcome = "fail"
    return report
