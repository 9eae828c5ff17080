"""Standard parabolic subgroups of SL_N and horospherical coordinates.

A standard parabolic is the stabilizer of a standard flag, encoded by its
block sizes.  The maximal compact subgroup is SO(N).  Horospherical
coordinates ``g = u a m k`` come from an RQ factorization ``g = R Q``: the
block diagonal of ``R`` splits into block scalars (``a``) and determinant-one
blocks (``m``).

Parabolics conjugated by an orthogonal ``frame`` (``frame @ P @ frame.T``) are
handled by conjugating into standard position and back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .exact_lattice import rational_det
from .matrix_groups import Cocharacter, exact_inverse, is_exact, to_float
from .reduction import LLL_DELTA, lll

__all__ = [
    "StandardParabolic",
    "HorosphericalCoords",
    "SiegelSet",
    "CompatibilityReport",
    "BoundaryReport",
    "ActionReport",
    "Embedding",
    "simple_roots",
    "root_values",
    "parabolic_from_subset",
    "horospherical_decompose",
    "block_scalar_powers_exact",
    "relative_compatibility_check",
    "gram_block_factor",
    "siegel_membership",
    "reduce_to_siegel",
    "boundary_classify",
    "rational_boundary_action",
    "parabolic_from_cocharacter",
    "permutation_matrix",
    "embedding_compatibility_check",
]


@dataclass(frozen=True)
class StandardParabolic:
    composition: tuple[int, ...]

    def __post_init__(self):
        comp = tuple(int(x) for x in self.composition)
        if not comp or any(x < 1 for x in comp):
            raise ValueError(f"invalid composition {self.composition}")
        object.__setattr__(self, "composition", comp)

    @classmethod
    def borel(cls, n: int) -> "StandardParabolic":
        return cls((1,) * n)

    @classmethod
    def whole(cls, n: int) -> "StandardParabolic":
        return cls((n,))

    @property
    def N(self) -> int:
        return sum(self.composition)

    @property
    def num_roots(self) -> int:
        return len(self.composition) - 1

    def blocks(self) -> list[slice]:
        out, start = [], 0
        for size in self.composition:
            out.append(slice(start, start + size))
            start += size
        return out

    def block_index(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.composition)), self.composition)

    def contains(self, g, tol: float = 0.0) -> bool:
        """True when g is block upper triangular for this flag."""
        idx = self.block_index()
        g = np.asarray(g)
        below = idx[:, None] > idx[None, :]
        vals = np.abs(to_float(g))[below]
        return bool(np.all(vals <= tol))

    def refines(self, other: "StandardParabolic") -> bool:
        """True when self is contained in other (every boundary of other is one of ours)."""
        if self.N != other.N:
            return False
        mine = set(np.cumsum(self.composition)[:-1].tolist())
        theirs = set(np.cumsum(other.composition)[:-1].tolist())
        return theirs <= mine


def simple_roots(P: StandardParabolic) -> list[tuple[int, int]]:
    """Simple roots as pairs of block indices: alpha_i(a) = t_i / t_{i+1}."""
    return [(i, i + 1) for i in range(P.num_roots)]


def root_values(a, P: StandardParabolic) -> list[float]:
    t = block_scalars(a, P)
    return [t[i] / t[j] for i, j in simple_roots(P)]


def block_scalars(a, P: StandardParabolic) -> list[float]:
    d = np.diag(to_float(a))
    return [float(d[b.start]) for b in P.blocks()]


def parabolic_from_subset(P: StandardParabolic, I) -> StandardParabolic:
    """Merge the blocks across every boundary listed in I (roots are 1-based)."""
    I = set(int(i) for i in I)
    if any(not 1 <= i <= P.num_roots for i in I):
        raise ValueError(f"root indices {sorted(I)} outside 1..{P.num_roots}")
    comp = [P.composition[0]]
    for i, size in enumerate(P.composition[1:], start=1):
        if i in I:
            comp[-1] += size
        else:
            comp.append(size)
    return StandardParabolic(tuple(comp))


@dataclass
class HorosphericalCoords:
    u: np.ndarray
    a: np.ndarray
    m: np.ndarray
    k: np.ndarray
    parabolic: StandardParabolic
    frame: np.ndarray | None = None

    def assemble(self) -> np.ndarray:
        return self.u @ self.a @ self.m @ self.k

    @property
    def mk(self) -> np.ndarray:
        return self.m @ self.k

    def standard(self) -> "HorosphericalCoords":
        """The same coordinates conjugated back into standard position."""
        if self.frame is None:
            return self
        F = self.frame
        c = lambda x: F.T @ x @ F  # noqa: E731
        return HorosphericalCoords(c(self.u), c(self.a), c(self.m), c(self.k), self.parabolic)

    def block_scalars(self) -> list[float]:
        return block_scalars(self.standard().a, self.parabolic)

    def roots(self) -> list[float]:
        return root_values(self.standard().a, self.parabolic)

    def to_json(self) -> dict:
        out = {
            "composition": list(self.parabolic.composition),
            "u": self.u.tolist(), "a": self.a.tolist(),
            "m": self.m.tolist(), "k": self.k.tolist(),
            "block_scalars": self.block_scalars(),
            "roots": self.roots(),
        }
        if self.frame is not None:
            out["frame"] = self.frame.tolist()
        return out


def _rq_positive(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    R, Q = scipy.linalg.rq(h)
    s = np.sign(np.diag(R))
    if np.any(s == 0):
        raise ValueError("degenerate (non-invertible) matrix")
    return R * s[None, :], s[:, None] * Q


def horospherical_decompose(g, P: StandardParabolic, frame=None) -> HorosphericalCoords:
    g = to_float(g)
    n = P.N
    if g.shape != (n, n):
        raise ValueError(f"matrix shape {g.shape} does not match parabolic of SL_{n}")
    F = None if frame is None else np.asarray(frame, dtype=float)
    h = g if F is None else F.T @ g @ F
    if abs(np.linalg.det(h)) < 1e-300:
        raise ValueError("degenerate (non-invertible) matrix")
    R, Q = _rq_positive(h)
    L = np.zeros_like(R)
    for b in P.blocks():
        L[b, b] = R[b, b]
    u = R @ np.linalg.inv(L)
    # exact unipotent block diagonal
    for b in P.blocks():
        u[b, b] = np.eye(b.stop - b.start)
    scal = np.ones(n)
    for b in P.blocks():
        size = b.stop - b.start
        scal[b] = math.exp(np.sum(np.log(np.diag(R)[b])) / size)
    a = np.diag(scal)
    m = L / scal[:, None]
    if F is None:
        return HorosphericalCoords(u, a, m, Q, P)
    c = lambda x: F @ x @ F.T  # noqa: E731
    return HorosphericalCoords(c(u), c(a), c(m), c(Q), P, F)


def block_scalar_powers_exact(g, P: StandardParabolic) -> list[Fraction]:
    """Exact t_i^(2 n_i) for rational g, from Gram determinants of trailing rows."""
    rows = [[Fraction(x) for x in r] for r in np.asarray(g, dtype=object).tolist()]

    def gram_det(sub):
        return rational_det([[sum((x * y for x, y in zip(r1, r2)), Fraction(0)) for r2 in sub]
                             for r1 in sub]) if sub else Fraction(1)

    out = []
    for b in P.blocks():
        out.append(gram_det(rows[b.start:]) / gram_det(rows[b.stop:]))
    return out


@dataclass
class CompatibilityReport:
    u_deviation: float
    a_deviation: float
    mk_deviation: float
    tolerance: float

    @property
    def max_deviation(self) -> float:
        return max(self.u_deviation, self.a_deviation, self.mk_deviation)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def to_json(self) -> dict:
        return {"u_deviation": self.u_deviation, "a_deviation": self.a_deviation,
                "mk_deviation": self.mk_deviation, "max_deviation": self.max_deviation,
                "passed": self.passed}


def gram_block_factor(g, P: StandardParabolic) -> HorosphericalCoords:
    """Horospherical coordinates from the block factorization g g^T = U D U^T.

    Independent of the RQ route: U is block upper unipotent and D block
    diagonal, eliminated from the last block upward by Schur complements.
    Only u, a and the product m k are meaningful; m is returned as the
    identity and k holds m k.
    """
    g = to_float(g)
    S = g @ g.T
    n = P.N
    U = np.eye(n)
    scal = np.ones(n)
    for b in reversed(P.blocks()):
        top = slice(0, b.start)
        Sbb = S[b, b]
        size = b.stop - b.start
        scal[b] = np.linalg.det(Sbb) ** (1.0 / (2 * size))
        if b.start:
            X = np.linalg.solve(Sbb, S[b, top]).T
            U[top, b] = X
            S = S.copy()
            S[top, top] = S[top, top] - X @ S[b, top]
    a = np.diag(scal)
    mk = np.linalg.solve(U @ a, g)
    return HorosphericalCoords(U, a, np.eye(n), mk, P)


def relative_compatibility_check(g, P: StandardParabolic, I, tol: float = 1e-8) -> CompatibilityReport:
    """Compare the decomposition for P_I with the one induced from P.

    The P_I side is computed by :func:`gram_block_factor`, so the two sides
    share no factorization.
    """
    g = to_float(g)
    PI = parabolic_from_subset(P, I)
    fine = horospherical_decompose(g, P)
    coarse = gram_block_factor(g, PI)
    # U_P = U_{P_I} x U_P^I, the second factor block diagonal for P_I
    uI = np.zeros_like(fine.u)
    for b in PI.blocks():
        uI[b, b] = fine.u[b, b]
    u_rel = fine.u @ np.linalg.inv(uI)
    # A_P = A_{P_I} x A_P^I; the Killing-orthogonal projection averages logs per block
    logs = np.log(np.diag(fine.a))
    proj = np.empty_like(logs)
    for b in PI.blocks():
        proj[b] = logs[b].mean()
    a_rel = np.diag(np.exp(proj))
    aI = np.diag(np.exp(logs - proj))
    mk_rel = uI @ aI @ fine.m @ fine.k
    return CompatibilityReport(
        float(np.abs(u_rel - coarse.u).max()),
        float(np.abs(a_rel - coarse.a).max()),
        float(np.abs(mk_rel - coarse.mk).max()),
        tol,
    )


@dataclass(frozen=True)
class SiegelSet:
    parabolic: StandardParabolic
    t: float
    bound_U: float
    bound_M: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("Siegel parameter t must be positive")
        if not (math.isfinite(self.bound_U) and math.isfinite(self.bound_M)):
            raise ValueError("Siegel bounds must be finite")


def siegel_membership(g, S: SiegelSet) -> bool:
    c = horospherical_decompose(g, S.parabolic)
    if any(r <= S.t for r in c.roots()):
        return False
    off = c.u - np.eye(S.parabolic.N)
    if np.abs(off).max(initial=0.0) > S.bound_U:
        return False
    return float(np.linalg.norm(c.m, 2)) <= S.bound_M


def reduce_to_siegel(g, delta: float = LLL_DELTA):
    """Find gamma in SL_N(Z) with gamma @ g in a standard Siegel set for the Borel.

    The rows of ``g`` span the lattice; the decomposition orthogonalizes from
    the last row upward, so the rows are LLL-reduced in reverse order.  For
    N = 2 this is Gauss reduction and the guaranteed constants are
    t = sqrt(3)/2 and |u| <= 1/2; in general t = sqrt(delta - 1/4).

    Returns ``(gamma, coords, siegel_set)``; membership is re-checked.
    """
    g = to_float(g)
    n = g.shape[0]
    B = g[::-1]
    if n == 2:
        R, U = lll(B, delta=1.0)
    else:
        R, U = lll(B, delta=delta)
    gamma = U[::-1, ::-1].astype(np.int64)
    if round(np.linalg.det(gamma)) < 0:
        gamma[0] *= -1
    h = gamma @ g
    P = StandardParabolic.borel(n)
    coords = horospherical_decompose(h, P)
    t = math.sqrt(3) / 2 if n == 2 else math.sqrt(delta - 0.25)
    # strict inequalities in the Siegel set; shave the guaranteed constants
    S = SiegelSet(P, t * (1 - 1e-9), 0.5 + 1e-9, 1.0 + 1e-9)
    if not siegel_membership(h, S):
        raise RuntimeError("reduced element failed the Siegel membership check")
    return gamma, coords, S


@dataclass
class BoundaryReport:
    roots: list[str]
    divergent: list[int]
    bounded: list[int]
    unclassified: list[int]
    I: list[int] | None
    outcome: str
    stratum: StandardParabolic | None = None
    u_limit: np.ndarray | None = None
    residual: np.ndarray | None = None

    def to_json(self) -> dict:
        out = {"roots": self.roots, "divergent": self.divergent, "bounded": self.bounded,
               "unclassified": self.unclassified, "I": self.I, "outcome": self.outcome}
        if self.stratum is not None:
            out["stratum"] = list(self.stratum.composition)
            out["u_limit"] = self.u_limit.tolist()
            out["residual"] = self.residual.tolist()
        return out


def boundary_classify(trajectory: Sequence, P: StandardParabolic,
                      threshold: float = 1e3, band: tuple[float, float] = (1e-2, 1e2)
                      ) -> BoundaryReport:
    """Sort the simple roots of P into divergent and bounded along a finite trajectory.

    Divergent: final value above ``threshold`` and nondecreasing over the last
    half.  Bounded: inside ``band`` throughout.  I is the bounded set; the
    limit point is read off the final element in coordinates for P_I.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    values = np.array([horospherical_decompose(g, P).roots() for g in trajectory])
    values = values.reshape(len(trajectory), P.num_roots)
    half = values[len(values) // 2:]
    names = [f"alpha_{i + 1}" for i in range(P.num_roots)]
    div, bdd, unc = [], [], []
    for i in range(P.num_roots):
        col = values[:, i]
        tail = half[:, i]
        if col[-1] > threshold and np.all(np.diff(tail) >= -1e-12 * np.abs(tail[1:])):
            div.append(i + 1)
        elif np.all((col >= band[0]) & (col <= band[1])):
            bdd.append(i + 1)
        else:
            unc.append(i + 1)
    if unc:
        return BoundaryReport(names, div, bdd, unc, None, "unclassified")
    PI = parabolic_from_subset(P, bdd)
    final = horospherical_decompose(trajectory[-1], PI)
    outcome = "interior" if len(bdd) == P.num_roots else "boundary"
    # residual point of X_{P_I} = M K / K, represented K-invariantly by m m^T
    return BoundaryReport(names, div, bdd, unc, bdd, outcome, PI, final.u, final.m @ final.m.T)


@dataclass
class ActionReport:
    assembly_error: float
    u_deviation: float
    a_deviation: float
    mk_deviation: float

    @property
    def max_deviation(self) -> float:
        return max(self.assembly_error, self.u_deviation, self.a_deviation, self.mk_deviation)


def _is_rational(q) -> bool:
    if is_exact(q):
        return True
    arr = np.asarray(q, dtype=float)
    return bool(np.all(np.abs(arr - np.round(arr)) < 1e-12))


def rational_boundary_action(q, coords: HorosphericalCoords, tol: float = 1e-9):
    """Push horospherical coordinates of g forward along left multiplication by q.

    The result is expressed for q P q^-1 (realized as an orthogonal frame
    conjugate of the standard parabolic) and is checked against both the
    product q @ g and a direct decomposition of q @ g.
    """
    if not _is_rational(q):
        raise ValueError("q must be rational (exact entries) or integral")
    if is_exact(q) and rational_det(np.asarray(q, dtype=object).tolist()) != 1:
        raise ValueError("q must have determinant one")
    qf = to_float(q)
    P = coords.parabolic
    F = np.eye(P.N) if coords.frame is None else coords.frame
    # q F = k0 p0 with k0 orthogonal and p0 in P
    Q, R = np.linalg.qr(qf @ F)
    s = np.sign(np.diag(R))
    k0 = Q * s[None, :]
    qc = horospherical_decompose(qf, P, frame=k0)
    aq_mq_kq = qc.a @ qc.m @ qc.k
    u_new = qc.u @ aq_mq_kq @ coords.u @ np.linalg.inv(aq_mq_kq)
    a_new = qc.a @ qc.k @ coords.a @ qc.k.T
    m_new = qc.m @ qc.k @ coords.m @ qc.k.T
    k_new = qc.k @ coords.k
    out = HorosphericalCoords(u_new, a_new, m_new, k_new, P, k0)
    target = qf @ coords.assemble()
    direct = horospherical_decompose(target, P, frame=k0)
    report = ActionReport(
        float(np.abs(out.assemble() - target).max()),
        float(np.abs(out.u - direct.u).max()),
        float(np.abs(out.a - direct.a).max()),
        float(np.abs(out.mk - direct.mk).max()),
    )
    return out, report


def parabolic_from_cocharacter(a: Cocharacter) -> tuple[StandardParabolic, tuple[int, ...]]:
    """Block structure of the weights sorted in decreasing order.

    ``perm[i]`` is the original index placed at position i (stable sort), so
    ``S = permutation_matrix(perm)`` satisfies ``S diag(w) S^T = diag(sorted w)``
    and the parabolic is ``S^T P S``: the elements g for which
    ``a_t^-1 g a_t`` stays bounded as t grows.
    """
    w = a.weights
    perm = tuple(sorted(range(len(w)), key=lambda i: -w[i]))
    comp = []
    prev = None
    for i in perm:
        if prev is not None and w[i] == prev:
            comp[-1] += 1
        else:
            comp.append(1)
        prev = w[i]
    return StandardParabolic(tuple(comp)), perm


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    S = np.zeros((n, n))
    for i, p in enumerate(perm):
        S[i, p] = 1.0
    return S


@dataclass(frozen=True)
class Embedding:
    """SL_m -> SL_N: ``g -> conj @ blockdiag(I_offset, g, ..., g, I_rest) @ conj^-1``.

    ``copies`` repeats g along the diagonal (the direct-sum embedding).  The
    embedding carries SO(m) into SO(N) exactly when ``conj`` is orthogonal.
    """

    m: int
    N: int
    offset: int = 0
    copies: int = 1
    conj: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.offset < 0 or self.offset + self.copies * self.m > self.N:
            raise ValueError("embedding blocks do not fit")
        if self.conj is not None:
            c = np.asarray(self.conj, dtype=float)
            if c.shape != (self.N, self.N) or not np.allclose(c @ c.T, np.eye(self.N), atol=1e-12):
                raise ValueError("embedding is not orthogonality-compatible: conjugator not orthogonal")

    def __call__(self, g) -> np.ndarray:
        g = to_float(g)
        out = np.eye(self.N)
        for c in range(self.copies):
            s = self.offset + c * self.m
            out[s:s + self.m, s:s + self.m] = g
        if self.conj is not None:
            C = np.asarray(self.conj, dtype=float)
            out = C @ out @ C.T
        return out

    def extend(self, a: Cocharacter) -> Cocharacter:
        if a.dim != self.m:
            raise ValueError("cocharacter dimension mismatch")
        w = [0] * self.N
        for c in range(self.copies):
            s = self.offset + c * self.m
            w[s:s + self.m] = a.weights
        return Cocharacter(tuple(w))

    def frame(self, a: Cocharacter) -> tuple[StandardParabolic, np.ndarray]:
        Q, perm = parabolic_from_cocharacter(self.extend(a))
        F = permutation_matrix(perm).T
        if self.conj is not None:
            F = np.asarray(self.conj, dtype=float) @ F
        return Q, F


def embedding_compatibility_check(g, embedding: Embedding, a: Cocharacter,
                                  tol: float = 1e-8) -> CompatibilityReport:
    """Coordinates of g for (P_a, SO(m)) versus iota(g) for (Q_a, SO(N))."""
    g = to_float(g)
    P, perm = parabolic_from_cocharacter(a)
    c_small = horospherical_decompose(g, P, frame=permutation_matrix(perm).T)
    Q, F = embedding.frame(a)
    c_big = horospherical_decompose(embedding(g), Q, frame=F)
    return CompatibilityReport(
        float(np.abs(embedding(c_small.u) - c_big.u).max()),
        float(np.abs(embedding(c_small.a) - c_big.a).max()),
        float(np.abs(embedding(c_small.mk) - c_big.mk).max()),
        tol,
    )
