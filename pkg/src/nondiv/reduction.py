"""Lattice reduction of real row bases: LLL, shortest-vector enumeration."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["gram_schmidt", "lll", "shortest_vector_enum", "LLL_DELTA"]

LLL_DELTA = 0.99


def gram_schmidt(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (B*, mu) with B = mu @ B* and mu unit lower triangular."""
    k = B.shape[0]
    Bs = np.zeros_like(B, dtype=float)
    mu = np.eye(k)
    for i in range(k):
        v = B[i].astype(float).copy()
        for j in range(i):
            nj = Bs[j] @ Bs[j]
            mu[i, j] = (B[i] @ Bs[j]) / nj if nj > 0 else 0.0
            v -= mu[i, j] * Bs[j]
        Bs[i] = v
    return Bs, mu


def lll(B, delta: float = LLL_DELTA) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce the rows of B.

    Returns ``(R, U)`` with ``R = U @ B`` and ``U`` an integer matrix of
    determinant +-1.
    """
    B = np.array(B, dtype=float)
    k = B.shape[0]
    U = np.eye(k, dtype=np.int64)
    if k <= 1:
        return B, U
    Bs, mu = gram_schmidt(B)
    i = 1
    while i < k:
        for j in range(i - 1, -1, -1):
            q = round(mu[i, j])
            if q:
                B[i] -= q * B[j]
                U[i] -= q * U[j]
                mu[i, :j + 1] -= q * mu[j, :j + 1]
        ni, nprev = Bs[i] @ Bs[i], Bs[i - 1] @ Bs[i - 1]
        if ni >= (delta - mu[i, i - 1] ** 2) * nprev:
            i += 1
        else:
            B[[i - 1, i]] = B[[i, i - 1]]
            U[[i - 1, i]] = U[[i, i - 1]]
            Bs, mu = gram_schmidt(B)
            i = max(i - 1, 1)
    return B, U


def shortest_vector_enum(B) -> tuple[float, np.ndarray]:
    """Exact shortest nonzero vector of the row lattice of B (Fincke-Pohst).

    Returns its length and integer coefficients with respect to the input rows.
    """
    R, U = lll(B)
    k = R.shape[0]
    Bs, mu = gram_schmidt(R)
    norms = np.einsum("ij,ij->i", Bs, Bs)
    best = float(R[0] @ R[0])
    best_x = np.zeros(k, dtype=np.int64)
    best_x[0] = 1
    x = np.zeros(k, dtype=np.int64)
    # slack for rounding in the bound; the final answer is recomputed exactly
    slack = 1e-12 * best

    def recurse(level: int, partial: float) -> None:
        nonlocal best, best_x
        c = -sum(x[j] * mu[j, level] for j in range(level + 1, k))
        rem = best + slack - partial
        if rem < 0:
            return
        r = math.sqrt(rem / norms[level]) if norms[level] > 0 else 0.0
        lo, hi = math.ceil(c - r), math.floor(c + r)
        for xi in range(lo, hi + 1):
            x[level] = xi
            p = partial + (xi - c) ** 2 * norms[level]
            if p > best + slack:
                continue
            if level == 0:
                if np.any(x):
                    v = x @ R
                    val = float(v @ v)
                    if 0 < val < best:
                        best, best_x = val, x.copy()
            else:
                recurse(level - 1, p)
        x[level] = 0

    recurse(k - 1, 0.0)
    return math.sqrt(best), best_x @ U
