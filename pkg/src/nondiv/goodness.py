"""Empirical (C, alpha)-good checks.

A function f is (C, alpha)-good on a domain when every ball B in it satisfies

    |{x in B : |f(x)| <= eps}| <= C (eps / sup_B |f|)^alpha |B|.

Balls are sup-norm balls (axis-aligned cubes) inside the window box.
Sublevel fractions come from scrambled Sobol points; sup_B |f| from a grid
refined around its maximum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .exact_lattice import LatticeModule, subsets
from .matrix_groups import exp_lie, to_float

__all__ = ["GoodnessParams", "CGoodReport", "cgood_check", "orbit_norm_function", "polynomial_function"]

SUP_FLOOR = 1e-12


@dataclass(frozen=True)
class GoodnessParams:
    C: float
    alpha: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass
class CGoodReport:
    balls: int
    skipped: int
    violations: int
    worst_ratio: float
    examples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"balls": self.balls, "skipped": self.skipped, "violations": self.violations,
                "worst_ratio": self.worst_ratio, "examples": self.examples[:10]}


def orbit_norm_function(g, gamma, W: LatticeModule, H) -> Callable[[np.ndarray], np.ndarray]:
    """x -> sup-norm of the wedge of W @ (g^-1 gamma h0 exp(x) gamma^-1)."""
    g = to_float(g)
    n = g.shape[0]
    gam = np.eye(n) if gamma is None else to_float(gamma)
    left = np.linalg.inv(g) @ gam @ to_float(H.h0)
    right = np.linalg.inv(gam)
    basis = np.array(W.rows(), dtype=float)
    idx = [list(s) for s in subsets(n, W.rank)]

    def f(xs: np.ndarray) -> np.ndarray:
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            M = basis @ left @ exp_lie(H.lie_element(x)) @ right
            out[i] = max(abs(np.linalg.det(M[:, s])) for s in idx)
        return out

    return f


def polynomial_function(coeffs: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """x -> sum c_i x^i on a one-dimensional window (coefficients in ascending degree)."""
    c = np.asarray(coeffs, dtype=float)[::-1]
    return lambda xs: np.polyval(c, np.asarray(xs, dtype=float)[:, 0])


def _sup_estimate(f, lo, hi, points, values) -> float:
    d = len(lo)
    res = max(3, int(round(4096 ** (1.0 / d))) if d else 1)
    axes = [np.linspace(l, h, res) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    gv = np.abs(f(grid))
    best_val = max(float(gv.max()), float(values.max()))
    best = grid[int(np.argmax(gv))] if gv.max() >= values.max() else points[int(np.argmax(values))]
    step = (hi - lo) / (res - 1)
    for _ in range(4):
        sub_axes = [np.clip(np.linspace(c - s, c + s, 9), l, h)
                    for c, s, l, h in zip(best, step, lo, hi)]
        sub = np.stack(np.meshgrid(*sub_axes, indexing="ij"), axis=-1).reshape(-1, d)
        sv = np.abs(f(sub))
        if sv.max() > best_val:
            best_val, best = float(sv.max()), sub[int(np.argmax(sv))]
        step = step / 4
    return best_val


def _ball(rng: np.random.Generator, lo: np.ndarray, hi: np.ndarray):
    center = lo + rng.random(len(lo)) * (hi - lo)
    room = float(np.min(np.minimum(center - lo, hi - center)))
    r = room * (0.05 + 0.95 * rng.random())
    return center - r, center + r


def cgood_check(f: Callable[[np.ndarray], np.ndarray], window: Sequence[tuple[float, float]],
                params: GoodnessParams, n_balls: int = 1000, n_eps: int = 16,
                rng_seed: int = 0, n_points: int = 1024, threads: int = 1) -> CGoodReport:
    """Search for balls and levels where the sublevel measure exceeds C (eps/sup)^alpha.

    ``f`` maps an (m, d) array of window points to m values.  The first
    ball is the whole window.  A violation needs the estimate to exceed the
    bound by more than three binomial standard deviations plus 1/n_points.
    """
    lo = np.array([float(w[0]) for w in window])
    hi = np.array([float(w[1]) for w in window])
    if len(lo) == 0 or np.any(hi <= lo):
        raise ValueError("window is empty")
    d = len(lo)
    m = n_points
    ratios = 10.0 ** np.linspace(-3, 0, n_eps)

    def one(i: int):
        rng = np.random.default_rng([rng_seed, i])
        if i == 0:
            blo, bhi = lo, hi
        else:
            blo, bhi = _ball(rng, lo, hi)
        pts = qmc.Sobol(d, scramble=True, seed=rng).random(m)
        pts = blo + pts * (bhi - blo)
        vals = np.abs(f(pts))
        sup = _sup_estimate(f, blo, bhi, pts, vals)
        if sup < SUP_FLOOR:
            return None
        worst, bad = 0.0, []
        for r in ratios:
            eps = r * sup
            est = float(np.mean(vals <= eps))
            bound = params.C * r ** params.alpha
            if bound > 0:
                worst = max(worst, est / bound)
            b = min(bound, 1.0)
            slack = 3 * math.sqrt(b * (1 - b) / m) + 1.0 / m
            if est > bound + slack:
                bad.append({"ball": [blo.tolist(), bhi.tolist()], "eps": eps,
                            "estimate": est, "bound": bound})
        return worst, bad

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(n_balls)))
    else:
        results = [one(i) for i in range(n_balls)]
    skipped = sum(r is None for r in results)
    kept = [r for r in results if r is not None]
    examples = [b for _, bad in kept for b in bad]
    worst = max((w for w, _ in kept), default=0.0)
    return CGoodReport(n_balls, skipped, len(examples), worst, examples)
