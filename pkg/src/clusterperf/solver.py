"""Iterative stationary solver: in-place balance sweeps with per-iteration normalisation.

Each state's balance equation ``P(s) * out(s) = sum_in rate * P(src)`` is
rewritten as an update for ``P(s)``. The right-hand sides come from inverting
the transition rules of :mod:`clusterperf.model`, so both planes and the
cross-plane (head failure/repair) terms are covered by one update.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from .approx import initial_field
from .model import (
    Metrics,
    ProbabilityField,
    SystemParams,
    arc_arrays,
    mean_queue_length,
    metrics_from,
    outflow_array,
    validate_params,
)

log = logging.getLogger(__name__)


class SolverFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    delta: float = 1e-3
    max_iterations: int = 2**18
    residual_target: float | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.residual_target is not None and self.residual_target < 0:
            raise ValueError("residual_target must be >= 0")


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    converged: bool
    final_mql_delta: float
    final_residual: float
    wall_time: float


class InflowOperator:
    """Precomputed inflow adjacency (CSR by destination) and exit rates."""

    def __init__(self, p: SystemParams):
        n = p.n_states
        idx = np.int32 if n < 2**31 - 1 else np.int64
        src, dst, rate = arc_arrays(p, dtype=idx)
        m = sp.csr_matrix((rate, (dst, src)), shape=(n, n))
        del src, dst, rate
        m.sum_duplicates()
        self.matrix = m
        self.outflow = outflow_array(p)
        self.S, self.L = p.S, p.L

    def inflow(self, field: ProbabilityField) -> np.ndarray:
        return self.matrix @ field.flat


@numba.njit(cache=True)
def _gauss_seidel(x, indptr, indices, data, outflow):
    for s in range(x.size):
        acc = 0.0
        for k in range(indptr[s], indptr[s + 1]):
            acc += data[k] * x[indices[k]]
        x[s] = acc / outflow[s]


def sweep(field: ProbabilityField, p: SystemParams, op: InflowOperator | None = None) -> ProbabilityField:
    """One in-place Gauss-Seidel pass in flat order (head-up plane first).

    Returns a new field; the input is left untouched.
    """
    op = op or InflowOperator(p)
    out = field.copy()
    m = op.matrix
    _gauss_seidel(out.flat, m.indptr, m.indices, m.data, op.outflow)
    return out


def _normalize_inplace(x: np.ndarray) -> None:
    total = x.sum()
    if not np.isfinite(total) or total <= 0:
        raise SolverFailure(f"cannot normalise field with total {total!r}")
    x /= total


def normalize(field: ProbabilityField) -> ProbabilityField:
    out = field.copy()
    _normalize_inplace(out.flat)
    return out


def residual(field: ProbabilityField, p: SystemParams, op: InflowOperator | None = None) -> float:
    """Largest absolute balance violation ``|inflow(s) - out(s) P(s)|``."""
    op = op or InflowOperator(p)
    return float(np.max(np.abs(op.inflow(field) - op.outflow * field.flat)))


def solve(
    p: SystemParams,
    cfg: SolverConfig = SolverConfig(),
    initial: ProbabilityField | None = None,
    on_iteration=None,
) -> tuple[ProbabilityField, Metrics, SolveReport]:
    """Sweep and normalise until successive MQL values differ by at most ``cfg.delta``.

    Starts from :func:`~clusterperf.approx.initial_field` unless ``initial`` is
    given. Hitting ``max_iterations`` is reported through ``converged=False``
    with the last field, not raised. ``on_iteration(k, field)`` is called after
    each normalisation when given.
    """
    validate_params(p)
    t0 = time.perf_counter()
    op = InflowOperator(p)
    field = (initial if initial is not None else initial_field(p)).copy()
    _normalize_inplace(field.flat)
    m = op.matrix
    mql_old = mean_queue_length(field)
    mql_delta = np.inf
    res = np.nan
    converged = False
    it = 0
    while it < cfg.max_iterations:
        it += 1
        _gauss_seidel(field.flat, m.indptr, m.indices, m.data, op.outflow)
        _normalize_inplace(field.flat)
        if on_iteration is not None:
            on_iteration(it, field)
        mql = mean_queue_length(field)
        mql_delta = abs(mql - mql_old)
        mql_old = mql
        if mql_delta <= cfg.delta:
            if cfg.residual_target is None:
                converged = True
                break
            res = residual(field, p, op)
            if res <= cfg.residual_target:
                converged = True
                break
    if np.isnan(res) or not converged:
        res = residual(field, p, op)
    report = SolveReport(it, converged, float(mql_delta), float(res), time.perf_counter() - t0)
    log.info("solve S=%d L=%d: %d iterations, converged=%s, %.2fs",
             p.S, p.L, it, converged, report.wall_time)
    return field, metrics_from(field, p), report
