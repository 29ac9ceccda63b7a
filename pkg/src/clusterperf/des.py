"""Discrete-event simulation of the cluster, used to cross-check the Markov solvers.

The simulator tracks the head status, the number of operative computing nodes
and a FCFS task buffer. All lifetimes are exponential, so at each step the
next event is drawn from the currently enabled event types (arrival, service
completion, computing failure, head failure, computing repair, head repair)
in proportion to their rates; a service interrupted by a failure is simply
re-sampled when capacity returns.

Failure rates while the head is up follow ``params.semantics`` exactly as in
:func:`clusterperf.model.transitions_from`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import stats

from .model import Semantics, SystemParams, validate_params

EVENT_NAMES = (
    "arrival",
    "service-completion",
    "computing-failure",
    "head-failure",
    "computing-repair",
    "head-repair",
)
ARRIVAL, SERVICE, NODE_FAIL, HEAD_FAIL, NODE_REPAIR, HEAD_REPAIR = range(6)

# indices into the raw statistics vector returned by the kernel
_AREA_J, _T_UP, _T_BLOCK, _DEP_W, _ACC_W, _J_START, _J_END = range(7)
_EVENTS, _ACC_TOTAL, _DEP_TOTAL, _SOJ_SUM, _SOJ_N = range(7, 12)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 20240901
    horizon: float = 1e5
    warmup: float | None = None  # defaults to 10% of horizon
    replications: int = 10
    confidence: float = 0.95
    track_sojourn: bool = False

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.replications < 2:
            raise ValueError("replications must be >= 2 for a confidence interval")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if self.warmup is not None and self.warmup < 0:
            raise ValueError("warmup must be >= 0")

    @property
    def warmup_time(self) -> float:
        return 0.1 * self.horizon if self.warmup is None else self.warmup


@dataclass(frozen=True)
class ReplicationSample:
    mql: float
    thrp: float
    mrt: float | None
    availability: float
    p_block: float
    accepted: int  # arrivals admitted over the whole run
    departures: int  # over the whole run
    in_system_end: int
    window_accepted: int
    window_departures: int
    window_start_jobs: int
    events: int
    sojourn_mrt: float | None = None
    trace: np.ndarray | None = None  # (time, event type) rows for the first events

    @property
    def no_departures(self) -> bool:
        return self.window_departures == 0


@dataclass(frozen=True)
class Estimate:
    mean: float | None
    half_width: float | None


@dataclass(frozen=True)
class SimResult:
    mql: Estimate
    thrp: Estimate
    mrt: Estimate
    availability: Estimate
    p_block: Estimate
    events: int
    wall_time: float
    samples: list[ReplicationSample] = field(default_factory=list, repr=False)


@numba.njit(cache=True)
def _run(seed, S, L, lam, mu, xi, xi_h, eta, eta_h, paper_literal,
         warmup, horizon, track_sojourn, trace_len):
    np.random.seed(seed)
    out = np.zeros(12)
    trace = np.zeros((trace_len, 2))
    rates = np.zeros(6)
    buf = np.zeros(L + 1 if track_sojourn else 1)
    head_pos = 0
    t_end = warmup + horizon
    t = 0.0
    head_up = True
    comp = S - 1  # operative computing nodes
    jobs = 0
    started = warmup <= 0.0
    if started:
        out[_J_START] = 0.0
    nev = 0
    while True:
        rates[ARRIVAL] = lam if jobs < L else 0.0
        if head_up:
            i = comp + 1
            rates[SERVICE] = min(i, jobs) * mu
            if paper_literal:
                rates[NODE_FAIL] = i * xi if i > 1 else 0.0
            else:
                rates[NODE_FAIL] = comp * xi
            rates[HEAD_FAIL] = xi_h
            rates[NODE_REPAIR] = eta if comp < S - 1 else 0.0
            rates[HEAD_REPAIR] = 0.0
        else:
            rates[SERVICE] = 0.0
            rates[NODE_FAIL] = comp * xi
            rates[HEAD_FAIL] = 0.0
            rates[NODE_REPAIR] = 0.0
            rates[HEAD_REPAIR] = eta_h
        total = rates.sum()
        t_next = t + np.random.exponential(1.0 / total)
        # time-weighted statistics over [warmup, t_end]
        a = max(t, warmup)
        z = min(t_next, t_end)
        if z > a:
            dt = z - a
            out[_AREA_J] += jobs * dt
            if head_up:
                out[_T_UP] += dt
            if jobs == L:
                out[_T_BLOCK] += dt
        if not started and t_next >= warmup:
            out[_J_START] = jobs
            started = True
        if t_next >= t_end:
            break
        t = t_next
        u = np.random.random() * total
        ev = 0
        acc = rates[0]
        while u >= acc and ev < 5:
            ev += 1
            acc += rates[ev]
        while rates[ev] == 0.0:  # guards against u landing on the upper edge
            ev -= 1
        in_window = t >= warmup
        if ev == ARRIVAL:
            if track_sojourn:
                buf[(head_pos + jobs) % (L + 1)] = t
            jobs += 1
            out[_ACC_TOTAL] += 1
            if in_window:
                out[_ACC_W] += 1
        elif ev == SERVICE:
            if track_sojourn:
                busy = min(comp + 1, jobs)
                r = (head_pos + np.random.randint(0, busy)) % (L + 1)
                arrived = buf[r]
                buf[r] = buf[head_pos]
                head_pos = (head_pos + 1) % (L + 1)
                if in_window:
                    out[_SOJ_SUM] += t - arrived
                    out[_SOJ_N] += 1
            jobs -= 1
            out[_DEP_TOTAL] += 1
            if in_window:
                out[_DEP_W] += 1
        elif ev == NODE_FAIL:
            comp -= 1
        elif ev == HEAD_FAIL:
            head_up = False
        elif ev == NODE_REPAIR:
            comp += 1
        else:
            head_up = True
        if nev < trace_len:
            trace[nev, 0] = t
            trace[nev, 1] = ev
        nev += 1
    out[_J_END] = jobs
    out[_EVENTS] = nev
    return out, trace


def replication_seed(master: int, rep_index: int) -> int:
    ss = np.random.SeedSequence([master & 0xFFFFFFFFFFFFFFFF, rep_index])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def run_replication(p: SystemParams, cfg: SimConfig, rep_index: int,
                    trace_len: int = 0) -> ReplicationSample:
    validate_params(p)
    raw, trace = _run(
        replication_seed(cfg.seed, rep_index), p.S, p.L, float(p.lam), float(p.mu),
        float(p.xi), float(p.xi_h), float(p.eta), float(p.eta_h),
        p.semantics is Semantics.PAPER_LITERAL, float(cfg.warmup_time), float(cfg.horizon),
        bool(cfg.track_sojourn), int(trace_len),
    )
    h = cfg.horizon
    mql = float(raw[_AREA_J] / h)
    thrp = float(raw[_DEP_W] / h)
    soj = float(raw[_SOJ_SUM] / raw[_SOJ_N]) if cfg.track_sojourn and raw[_SOJ_N] > 0 else None
    return ReplicationSample(
        mql=mql,
        thrp=thrp,
        mrt=mql / thrp if thrp > 0 else None,
        availability=float(raw[_T_UP] / h),
        p_block=float(raw[_T_BLOCK] / h),
        accepted=int(raw[_ACC_TOTAL]),
        departures=int(raw[_DEP_TOTAL]),
        in_system_end=int(raw[_J_END]),
        window_accepted=int(raw[_ACC_W]),
        window_departures=int(raw[_DEP_W]),
        window_start_jobs=int(raw[_J_START]),
        events=int(raw[_EVENTS]),
        sojourn_mrt=soj,
        trace=trace if trace_len else None,
    )


def _estimate(values, confidence: float) -> Estimate:
    if any(v is None for v in values):
        return Estimate(None, None)
    x = np.asarray(values, dtype=float)
    n = x.size
    q = stats.t.ppf(0.5 + confidence / 2, n - 1)
    return Estimate(float(x.mean()), float(q * x.std(ddof=1) / math.sqrt(n)))


def aggregate(samples: list[ReplicationSample], confidence: float) -> dict[str, Estimate]:
    return {
        name: _estimate([getattr(s, name) for s in samples], confidence)
        for name in ("mql", "thrp", "mrt", "availability", "p_block")
    }


def simulate(p: SystemParams, cfg: SimConfig = SimConfig()) -> SimResult:
    """Independent replications with Student-t confidence half-widths."""
    validate_params(p)
    t0 = time.perf_counter()
    samples = [run_replication(p, cfg, r) for r in range(cfg.replications)]
    est = aggregate(samples, cfg.confidence)
    return SimResult(
        **est,
        events=sum(s.events for s in samples),
        wall_time=time.perf_counter() - t0,
        samples=samples,
    )
