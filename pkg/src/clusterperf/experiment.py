"""Parameter sweeps, figure presets, method comparison and timing."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

import numpy as np

from .des import SimConfig, simulate
from .model import Metrics, SystemParams, metrics_from, validate_params
from .oracle import DEFAULT_CAP, balance_residual, build_generator, stationary
from .solver import SolverConfig, solve

METHODS = ("iterative", "exact", "des")

# axis name -> SystemParams field
AXES = {
    "S": "S", "L": "L", "lambda": "lam", "lam": "lam", "mu": "mu",
    "xi": "xi", "xi_h": "xi_h", "eta": "eta", "eta_h": "eta_h", "semantics": "semantics",
}

BASE_CASE = SystemParams(S=500, L=1000, lam=70.0, mu=0.25, xi=0.001, xi_h=0.001,
                          eta=0.5, eta_h=0.5)
BASE_LAMBDAS = tuple(float(x) for x in range(10, 101, 10))


def set_axis(p: SystemParams, axis: str, value) -> SystemParams:
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {sorted(AXES)}")
    name = AXES[axis]
    if name in ("S", "L"):
        value = int(value)
    elif name != "semantics":
        value = float(value)
    changes = {name: value}
    if name == "mu":
        changes["mu_h"] = value
    return p.with_(**changes)


@dataclass
class SweepSpec:
    base: SystemParams
    axis: str
    values: list
    methods: tuple[str, ...] = ("iterative",)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    oracle_cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")


@dataclass
class SweepRow:
    method: str
    semantics: str
    S: int
    L: int
    lam: float
    mu: float
    xi: float
    xi_h: float
    eta: float
    eta_h: float
    mql: float | None = None
    thrp: float | None = None
    mrt: float | None = None
    availability: float | None = None
    p_block: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    residual: float | None = None
    ci_mql: float | None = None
    ci_thrp: float | None = None
    ci_mrt: float | None = None
    wall_ms: float | None = None
    error: str | None = None

    @classmethod
    def columns(cls) -> list[str]:
        return ["lambda" if f.name == "lam" else f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]

    def metrics(self) -> Metrics:
        return Metrics(self.mql, self.thrp, self.mrt, self.availability, self.p_block)


def _row(method: str, p: SystemParams) -> SweepRow:
    return SweepRow(method, p.semantics.value, p.S, p.L, p.lam, p.mu, p.xi, p.xi_h, p.eta, p.eta_h)


def _fill(row: SweepRow, m: Metrics) -> None:
    row.mql, row.thrp, row.mrt = m.mql, m.thrp, m.mrt
    row.availability, row.p_block = m.availability, m.p_block


def evaluate(p: SystemParams, method: str, solver: SolverConfig = SolverConfig(),
             sim: SimConfig = SimConfig(), oracle_cap: int = DEFAULT_CAP) -> SweepRow:
    """Run one method on one parameter set; failures land in ``row.error``."""
    row = _row(method, p)
    t0 = time.perf_counter()
    try:
        validate_params(p)
        if method == "iterative":
            _, m, rep = solve(p, solver)
            _fill(row, m)
            row.iterations, row.converged, row.residual = rep.iterations, rep.converged, rep.final_residual
        elif method == "exact":
            g = build_generator(p, oracle_cap)
            f = stationary(g)
            _fill(row, metrics_from(f, p))
            row.converged, row.residual = True, balance_residual(g, f)
        elif method == "des":
            r = simulate(p, sim)
            row.mql, row.thrp, row.mrt = r.mql.mean, r.thrp.mean, r.mrt.mean
            row.availability, row.p_block = r.availability.mean, r.p_block.mean
            row.ci_mql, row.ci_thrp, row.ci_mrt = r.mql.half_width, r.thrp.half_width, r.mrt.half_width
        else:
            raise ValueError(f"unknown method {method!r}")
    except Exception as exc:  # noqa: BLE001 - one bad point must not sink the sweep
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_ms = 1e3 * (time.perf_counter() - t0)
    return row


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    rows = []
    for v in spec.values:
        try:
            p = set_axis(spec.base, spec.axis, v)
        except (ValueError, TypeError) as exc:
            r = _row("-", spec.base)
            r.error = f"{type(exc).__name__}: {exc}"
            rows.append(r)
            continue
        for method in spec.methods:
            rows.append(evaluate(p, method, spec.solver, spec.sim, spec.oracle_cap))
    return rows


# --- presets -----------------------------------------------------------------

def _series(base: SystemParams, name: str, levels, **kw) -> list[SweepSpec]:
    return [SweepSpec(set_axis(base, name, v), "lambda", list(BASE_LAMBDAS), **kw) for v in levels]


def preset(name: str, base: SystemParams | None = None, **kw) -> list[SweepSpec]:
    """Sweep specs for one of the named figure or table presets.

    ``base`` replaces the default base case (handy for shrinking
    ``S``/``L``); the preset's own series parameter still overrides it.
    """
    b = base or BASE_CASE
    if name in ("fig8", "fig9", "fig10"):
        return _series(b, "xi", (0.001, 0.002, 0.004), **kw)
    if name == "fig11":
        return _series(b, "xi_h", (0.001, 0.01), **kw)
    if name == "fig12":
        return _series(b, "eta_h", (0.5, 0.05, 0.005, 0.0005), **kw)
    if name == "fig13":
        return _series(b, "S", (32, 64, 128, 256, 372), **kw)
    if name == "fig14":
        return _series(b, "L", (500, 1000, 1500, 2000), **kw)
    if name == "tables":
        big = b.with_(S=2 * b.S, L=2 * b.L)
        lambdas = [10.0, 40.0, 70.0, 100.0]
        return [SweepSpec(b, "lambda", lambdas, **kw), SweepSpec(big, "lambda", lambdas, **kw)]
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")


PRESETS = ("fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14", "tables")


# --- comparison ----------------------------------------------------------------

@dataclass(frozen=True)
class Discrepancy:
    method_a: str
    method_b: str
    metric: str
    value_a: float | None
    value_b: float | None
    relative: float | None
    passed: bool


def relative_discrepancy(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    if a == b:
        return 0.0
    return abs(a - b) / abs(b) if b != 0 else float("inf")


def discrepancies(name_a: str, a: Metrics, name_b: str, b: Metrics,
                  threshold: float = 0.05) -> list[Discrepancy]:
    out = []
    for metric in ("mql", "thrp", "mrt"):
        va, vb = getattr(a, metric), getattr(b, metric)
        rel = relative_discrepancy(va, vb)
        out.append(Discrepancy(name_a, name_b, metric, va, vb, rel,
                               rel is not None and rel <= threshold))
    return out


@dataclass
class ComparisonReport:
    rows: list[SweepRow]
    discrepancies: list[Discrepancy]
    threshold: float

    @property
    def passed(self) -> bool:
        return not any(r.error for r in self.rows) and all(d.passed for d in self.discrepancies)

    def max_discrepancy(self, method_a: str, method_b: str, metric: str) -> float | None:
        vals = [d.relative for d in self.discrepancies
                if (d.method_a, d.method_b, d.metric) == (method_a, method_b, metric)]
        return max(vals) if vals and None not in vals else None


def compare(p: SystemParams, solver: SolverConfig = SolverConfig(), sim: SimConfig = SimConfig(),
            methods=METHODS, threshold: float = 0.05, oracle_cap: int = DEFAULT_CAP) -> ComparisonReport:
    """Evaluate ``methods`` on ``p`` and compute pairwise relative discrepancies.

    Each pair is reported relative to the later method in ``METHODS`` order,
    i.e. iterative against exact and DES, exact against DES.
    """
    rows = {m: evaluate(p, m, solver, sim, oracle_cap) for m in METHODS if m in methods}
    found = []
    names = list(rows)
    for a_i, a in enumerate(names):
        for b in names[a_i + 1:]:
            if rows[a].error or rows[b].error:
                continue
            found += discrepancies(a, rows[a].metrics(), b, rows[b].metrics(), threshold)
    return ComparisonReport(list(rows.values()), found, threshold)


def time_methods(p: SystemParams, solver: SolverConfig = SolverConfig(),
                 sim: SimConfig = SimConfig(), methods=("iterative", "des")) -> dict[str, float]:
    """Wall-clock seconds per method on one instance."""
    return {m: evaluate(p, m, solver, sim).wall_ms / 1e3 for m in methods}


def is_nondecreasing(values, tol: float = 0.0) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) >= -tol))
