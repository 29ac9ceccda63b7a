"""Head-node / computing-node cluster model: parameters, state space, rates, metrics.

States are ``(i, j, n)``: ``i`` is the number of operative serving nodes,
``j`` the number of tasks in the system and ``n`` the head status (1 up, 0 down).
With the head up ``i`` runs over ``1..S`` (the head counts as a server); with
the head down it runs over ``0..S-1`` (computing nodes only).

Every other module derives its dynamics from :func:`arc_arrays`, which holds the
transition rules once, in vectorised form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np


class Semantics(str, enum.Enum):
    """Which count drives computing-node failures while the head is up.

    ``PAPER_LITERAL`` fails state ``i`` at ``i*xi``; ``PER_COMPUTING_NODE`` at
    ``(i-1)*xi`` since one of the ``i`` operative servers is the head.
    """

    PAPER_LITERAL = "paper-literal"
    PER_COMPUTING_NODE = "per-node"


class ParamError(ValueError):
    """Invalid model parameters. ``key`` names the offending field."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class SystemParams:
    S: int
    L: int
    lam: float
    mu: float
    xi: float
    xi_h: float
    eta: float
    eta_h: float
    mu_h: float | None = None
    semantics: Semantics = Semantics.PAPER_LITERAL

    def __post_init__(self):
        if self.mu_h is None:
            object.__setattr__(self, "mu_h", self.mu)
        object.__setattr__(self, "semantics", Semantics(self.semantics))

    @property
    def n_states(self) -> int:
        return 2 * self.S * (self.L + 1)

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    def with_(self, **changes) -> SystemParams:
        return replace(self, **changes)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["semantics"] = self.semantics.value
        return d


def validate_params(p: SystemParams) -> SystemParams:
    """Return ``p`` unchanged or raise :class:`ParamError` for the first violation."""
    for key in ("S", "L"):
        v = getattr(p, key)
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ParamError(key, f"{key} must be an integer, got {v!r}")
    if p.S < 1:
        raise ParamError("S", "S >= 1 violated")
    if p.L < p.S:
        raise ParamError("L", f"L >= S violated (L={p.L}, S={p.S})")
    for key in ("lam", "mu", "mu_h", "xi", "xi_h", "eta", "eta_h"):
        v = getattr(p, key)
        if isinstance(v, bool) or not isinstance(v, (int, float, np.floating, np.integer)):
            raise ParamError(key, f"{key} must be a number, got {v!r}")
        if not math.isfinite(v) or v < 0:
            raise ParamError(key, f"{key} must be finite and non-negative, got {v!r}")
    for key in ("lam", "mu", "eta", "eta_h", "xi_h"):
        if getattr(p, key) <= 0:
            raise ParamError(key, f"{key} must be strictly positive")
    if p.mu_h != p.mu:
        raise ParamError("mu_h", f"mu_h must equal mu (mu={p.mu}, mu_h={p.mu_h})")
    return p


class StateIndex(NamedTuple):
    i: int
    j: int
    n: int


def check_state(s: StateIndex, p: SystemParams) -> StateIndex:
    i, j, n = s
    lo, hi = (1, p.S) if n == 1 else (0, p.S - 1)
    if n not in (0, 1) or not lo <= i <= hi or not 0 <= j <= p.L:
        raise ValueError(f"state {tuple(s)} outside the state space for S={p.S}, L={p.L}")
    return StateIndex(int(i), int(j), int(n))


# Flat layout (also the sweep order): plane 1 with i = 1..S, then plane 0 with
# i = 0..S-1; j is the fast axis in both.

def flat_index(i, j, n, S: int, L: int):
    i = np.asarray(i)
    j = np.asarray(j)
    n = np.asarray(n)
    return np.where(n == 1, (i - 1) * (L + 1) + j, S * (L + 1) + i * (L + 1) + j)


def state_of(k: int, S: int, L: int) -> StateIndex:
    half = S * (L + 1)
    if k < half:
        return StateIndex(k // (L + 1) + 1, k % (L + 1), 1)
    k -= half
    return StateIndex(k // (L + 1), k % (L + 1), 0)


def state_arrays(S: int, L: int):
    """``(i, j, n)`` coordinate arrays for every state, in flat order."""
    col = np.arange(L + 1, dtype=np.int64)
    i1 = np.repeat(np.arange(1, S + 1, dtype=np.int64), L + 1)
    i0 = np.repeat(np.arange(0, S, dtype=np.int64), L + 1)
    n = np.concatenate([np.ones(S * (L + 1), np.int64), np.zeros(S * (L + 1), np.int64)])
    return np.concatenate([i1, i0]), np.tile(col, 2 * S), n


def _computing_fail_count(p: SystemParams, i):
    if p.semantics is Semantics.PAPER_LITERAL:
        return i
    return i - 1


def _arc_kinds(p: SystemParams, i, j, n):
    """Yield ``(kind, mask, to_i, to_j, to_n, rate)`` for each transition rule.

    ``rate`` broadcasts against ``mask``; arcs with zero rate are dropped by the
    callers.
    """
    up = n == 1
    down = ~up
    L, S = p.L, p.S
    yield "arrival", j < L, i, j + 1, n, p.lam
    yield "service", up & (j > 0), i, j - 1, n, np.minimum(i, j) * p.mu
    yield "node-failure", up & (i > 1), i - 1, j, n, _computing_fail_count(p, i) * p.xi
    yield "head-failure", up, i - 1, j, np.zeros_like(n), p.xi_h
    yield "node-repair", up & (i < S), i + 1, j, n, p.eta
    yield "node-failure", down & (i > 0), i - 1, j, n, i * p.xi
    yield "head-repair", down, i + 1, j, np.ones_like(n), p.eta_h


def arc_arrays(p: SystemParams, dtype=np.int64):
    """All transitions as flat-index arrays ``(src, dst, rate)``.

    Arcs are grouped by rule, so the arrays are not sorted by source.
    """
    S, L = p.S, p.L
    i, j, n = state_arrays(S, L)
    src_all = np.arange(n.size, dtype=dtype)
    srcs, dsts, rates = [], [], []
    for _, mask, ti, tj, tn, rate in _arc_kinds(p, i, j, n):
        rate = np.broadcast_to(np.asarray(rate, dtype=float), n.shape)
        keep = mask & (rate > 0)
        srcs.append(src_all[keep])
        dsts.append(flat_index(ti[keep], tj[keep], tn[keep], S, L).astype(dtype))
        rates.append(rate[keep])
    return np.concatenate(srcs), np.concatenate(dsts), np.concatenate(rates)


def outflow_array(p: SystemParams) -> np.ndarray:
    """Total exit rate of every state, in flat order."""
    i, j, n = state_arrays(p.S, p.L)
    out = np.zeros(n.size)
    for _, mask, *_, rate in _arc_kinds(p, i, j, n):
        rate = np.broadcast_to(np.asarray(rate, dtype=float), n.shape)
        out += np.where(mask & (rate > 0), rate, 0.0)
    return out


@dataclass(frozen=True)
class Transition:
    src: StateIndex
    dst: StateIndex
    rate: float
    kind: str = ""


def transitions_from(s: StateIndex, p: SystemParams) -> list[Transition]:
    s = check_state(StateIndex(*s), p)
    i, j, n = (np.array([v]) for v in s)
    arcs = []
    for kind, mask, ti, tj, tn, rate in _arc_kinds(p, i, j, n):
        rate = float(np.broadcast_to(rate, (1,))[0])
        if mask[0] and rate > 0:
            arcs.append(Transition(s, StateIndex(int(ti[0]), int(tj[0]), int(tn[0])), rate, kind))
    return arcs


def total_outflow(s: StateIndex, p: SystemParams) -> float:
    return sum(t.rate for t in transitions_from(s, p))


class ProbabilityField:
    """Probabilities over both planes, stored flat in sweep order.

    ``plane1[i-1, j]`` is ``P(i, j, head up)`` and ``plane0[i, j]`` is
    ``P(i, j, head down)``; both are views into :attr:`flat`.
    """

    def __init__(self, S: int, L: int, flat: np.ndarray | None = None):
        self.S, self.L = S, L
        size = 2 * S * (L + 1)
        if flat is None:
            flat = np.zeros(size)
        flat = np.ascontiguousarray(flat, dtype=float)
        if flat.shape != (size,):
            raise ValueError(f"expected {size} entries, got shape {flat.shape}")
        self.flat = flat

    @classmethod
    def uniform(cls, S: int, L: int) -> ProbabilityField:
        size = 2 * S * (L + 1)
        return cls(S, L, np.full(size, 1.0 / size))

    @classmethod
    def point_mass(cls, s: StateIndex, S: int, L: int) -> ProbabilityField:
        f = cls(S, L)
        f[s] = 1.0
        return f

    @property
    def plane1(self) -> np.ndarray:
        half = self.S * (self.L + 1)
        return self.flat[:half].reshape(self.S, self.L + 1)

    @property
    def plane0(self) -> np.ndarray:
        half = self.S * (self.L + 1)
        return self.flat[half:].reshape(self.S, self.L + 1)

    def _k(self, s) -> int:
        return int(flat_index(*s, self.S, self.L))

    def __getitem__(self, s) -> float:
        return float(self.flat[self._k(s)])

    def __setitem__(self, s, value: float):
        self.flat[self._k(s)] = value

    def total(self) -> float:
        return float(self.flat.sum())

    def copy(self) -> ProbabilityField:
        return ProbabilityField(self.S, self.L, self.flat.copy())


@dataclass(frozen=True)
class Metrics:
    mql: float
    thrp: float
    mrt: float | None  # None when throughput is zero
    availability: float
    p_block: float


def mean_queue_length(field: ProbabilityField) -> float:
    j = np.arange(field.L + 1)
    return float(field.plane1.sum(axis=0) @ j + field.plane0.sum(axis=0) @ j)


def metrics_from(field: ProbabilityField, p: SystemParams) -> Metrics:
    S, L = field.S, field.L
    if (S, L) != (p.S, p.L):
        raise ValueError("field shape does not match parameters")
    busy = np.minimum.outer(np.arange(1, S + 1), np.arange(L + 1))
    thrp = p.mu * float((busy * field.plane1).sum())
    mql = mean_queue_length(field)
    return Metrics(
        mql=mql,
        thrp=thrp,
        mrt=mql / thrp if thrp > 0 else None,
        availability=float(field.plane1.sum()),
        p_block=float(field.plane1[:, L].sum() + field.plane0[:, L].sum()),
    )
