"""Exact stationary distribution for small instances.

The generator is reordered level by level (task count ``j`` outermost), which
makes it banded with half-width ``2S``; GTH elimination then never fills
outside the band and costs ``O(N * S^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .model import ProbabilityField, StateIndex, SystemParams, arc_arrays, state_arrays, state_of

DEFAULT_CAP = 200_000


class OracleCapExceeded(ValueError):
    pass


class ReducibleChainError(ValueError):
    def __init__(self, message: str, absorbing: list[list[StateIndex]]):
        super().__init__(message)
        self.absorbing = absorbing


@dataclass(frozen=True)
class SparseGenerator:
    S: int
    L: int
    matrix: sp.csr_matrix  # flat layout of ProbabilityField

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_generator(p: SystemParams, cap: int = DEFAULT_CAP) -> SparseGenerator:
    n = p.n_states
    if n > cap:
        raise OracleCapExceeded(
            f"instance too large for exact solve: {n} states > cap {cap}")
    src, dst, rate = arc_arrays(p)
    q = sp.csr_matrix((rate, (src, dst)), shape=(n, n))
    q.sum_duplicates()
    out = np.asarray(q.sum(axis=1)).ravel()
    q = (q - sp.diags(out)).tocsr()
    return SparseGenerator(p.S, p.L, q)


def _band_order(S: int, L: int) -> np.ndarray:
    """Position of each flat-layout state in the level-major order.

    Within a level, head-down ``i`` and head-up ``i+1`` sit next to each other
    so the head failure/repair arcs stay adjacent.
    """
    i, j, n = state_arrays(S, L)
    phase = np.where(n == 1, 2 * i - 1, 2 * i)
    return j * (2 * S) + phase


@numba.njit(cache=True)
def _gth_banded(band, b):
    # band[r, c - r + b] holds off-diagonal rate r -> c for |c - r| <= b.
    n = band.shape[0]
    pivots = np.zeros(n)
    for k in range(n - 1, 0, -1):
        lo = max(0, k - b)
        s = 0.0
        for c in range(lo, k):
            s += band[k, c - k + b]
        if s <= 0.0:
            return pivots, k
        pivots[k] = s
        for r in range(lo, k):
            a = band[r, k - r + b]
            if a == 0.0:
                continue
            f = a / s
            for c in range(lo, k):
                if c != r:
                    band[r, c - r + b] += f * band[k, c - k + b]
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        acc = 0.0
        for r in range(max(0, k - b), k):
            acc += pi[r] * band[r, k - r + b]
        pi[k] = acc / pivots[k]
    return pi / pi.sum(), -1


def _closed_classes(g: SparseGenerator) -> list[np.ndarray]:
    """Member indices of each closed communicating class."""
    off = (g.matrix - sp.diags(g.matrix.diagonal())).tocsr()
    off.eliminate_zeros()
    ncomp, labels = connected_components(off, directed=True, connection="strong")
    coo = off.tocoo()
    leaves_comp = labels[coo.row] != labels[coo.col]
    exits = np.zeros(ncomp, dtype=bool)
    exits[labels[coo.row][leaves_comp]] = True
    return [np.flatnonzero(labels == c) for c in range(ncomp) if not exits[c]]


def stationary(g: SparseGenerator) -> ProbabilityField:
    """Stationary vector by subtraction-free (GTH) elimination on the banded generator.

    Transient states (possible when computing nodes never fail) get probability
    zero; more than one closed class raises :class:`ReducibleChainError`.
    """
    S, L = g.S, g.L
    closed = _closed_classes(g)
    if len(closed) != 1:
        absorbing = [[state_of(int(k), S, L) for k in members] for members in closed]
        raise ReducibleChainError(
            f"chain has {len(closed)} closed classes, no unique stationary distribution: "
            f"{[cls[:5] for cls in absorbing]}", absorbing)
    keep = closed[0]
    pos = _band_order(S, L)[keep]
    rank = np.empty(g.dimension, dtype=np.int64)
    rank[keep] = np.argsort(np.argsort(pos))
    sub = g.matrix[keep][:, keep].tocoo()
    off = sub.row != sub.col
    r, c, v = rank[keep[sub.row[off]]], rank[keep[sub.col[off]]], sub.data[off]
    b = 2 * S
    if np.any(np.abs(r - c) > b):
        raise AssertionError("generator is not banded in level order")
    band = np.zeros((keep.size, 2 * b + 1))
    band[r, c - r + b] = v
    pi, failed_at = _gth_banded(band, b)
    if failed_at >= 0:
        raise ReducibleChainError(f"zero pivot at level-order state {failed_at}", [])
    flat = np.zeros(g.dimension)
    flat[keep] = pi[rank[keep]]
    return ProbabilityField(S, L, flat)


def solve_exact(p: SystemParams, cap: int = DEFAULT_CAP) -> ProbabilityField:
    return stationary(build_generator(p, cap))


def balance_residual(g: SparseGenerator, field: ProbabilityField) -> float:
    """``max |pi G|``."""
    return float(np.max(np.abs(g.matrix.T @ field.flat)))
