"""Closed-form decomposition used as the warm start of the iterative solver.

Plane masses follow from the head on/off chain alone. Within the head-up plane
the operative count is treated as a birth-death chain (repairs up, failures
down) and, for a fixed operative count, tasks as a truncated multi-server queue.
The head-down plane gets its mass spread uniformly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProbabilityField, Semantics, SystemParams


@dataclass(frozen=True)
class Decomposition:
    m0: float
    m1: float
    marginal_i: np.ndarray  # shape (S,), entry k is column i = k + 1
    conditional_j: np.ndarray  # shape (S, L+1), rows sum to 1
    rho: float


def plane_masses(p: SystemParams) -> tuple[float, float]:
    total = p.eta_h + p.xi_h
    return p.xi_h / total, p.eta_h / total


def _normalized_from_logs(logw: np.ndarray, axis=-1) -> np.ndarray:
    w = np.exp(logw - logw.max(axis=axis, keepdims=True))
    return w / w.sum(axis=axis, keepdims=True)


def operative_marginal(p: SystemParams) -> np.ndarray:
    """Head-up mass per operative count ``i = 1..S``, summing to the plane-1 mass."""
    _, m1 = plane_masses(p)
    S = p.S
    out = np.zeros(S)
    if p.xi == 0:
        out[-1] = m1
        return out
    # ratio w[i+1]/w[i] from eta*P_i = f(i+1)*xi*P_{i+1}
    i = np.arange(1, S, dtype=float)
    down = i + 1 if p.semantics is Semantics.PAPER_LITERAL else i
    logw = np.concatenate([[0.0], np.cumsum(np.log(p.eta) - np.log(p.xi) - np.log(down))])
    return m1 * _normalized_from_logs(logw)


def column_conditionals(p: SystemParams) -> np.ndarray:
    """Truncated ``i``-server queue distribution over ``j = 0..L`` for every ``i``.

    Built from the ratio ``w(j+1)/w(j) = rho/min(j+1, i)`` in log space, so it
    stays finite for thousands of servers and large ``rho``.
    """
    return _queue_conditionals(np.arange(1, p.S + 1), p.rho, p.L)


def _queue_conditionals(servers: np.ndarray, rho: float, L: int) -> np.ndarray:
    servers = np.asarray(servers, dtype=float)[:, None]
    j = np.arange(1, L + 1, dtype=float)[None, :]
    steps = np.log(rho) - np.log(np.minimum(j, servers))
    logw = np.concatenate([np.zeros((servers.shape[0], 1)), np.cumsum(steps, axis=1)], axis=1)
    return _normalized_from_logs(logw, axis=1)


def column_conditional(i: int, p: SystemParams) -> np.ndarray:
    if not 1 <= i <= p.S:
        raise ValueError(f"column {i} outside 1..{p.S}")
    return _queue_conditionals(np.array([i]), p.rho, p.L)[0]


def decompose(p: SystemParams) -> Decomposition:
    m0, m1 = plane_masses(p)
    return Decomposition(m0, m1, operative_marginal(p), column_conditionals(p), p.rho)


def initial_field(p: SystemParams) -> ProbabilityField:
    d = decompose(p)
    field = ProbabilityField(p.S, p.L)
    field.plane1[:] = d.marginal_i[:, None] * d.conditional_j
    field.plane0[:] = d.m0 / (p.S * (p.L + 1))
    return field
