"""Command-line front end.

Usage::

    clusterperf solve --s 50 --l 100 --lambda 10
    clusterperf exact --config run.json
    clusterperf repro fig8 --out fig8.csv

Configuration is a flat JSON object (see ``CONFIG_KEYS``); flags override it.
All rates are taken as given and must share one time unit.

Exit codes: 0 ok, 1 invalid configuration, 2 solver did not converge,
3 instance too large for the exact solver.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .des import SimConfig
from .experiment import (
    METHODS,
    BASE_CASE,
    PRESETS,
    ComparisonReport,
    SweepRow,
    SweepSpec,
    compare,
    evaluate,
    preset,
    run_sweep,
)
from .model import ParamError, Semantics, SystemParams, validate_params
from .oracle import DEFAULT_CAP
from .solver import SolverConfig

log = logging.getLogger("clusterperf")

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_TOO_LARGE = 0, 1, 2, 3
CSV_SCHEMA_VERSION = 1

# key -> (type, default). Model defaults are the base case.
CONFIG_KEYS: dict[str, tuple[type | tuple, object]] = {
    "S": (int, BASE_CASE.S),
    "L": (int, BASE_CASE.L),
    "lambda": (float, BASE_CASE.lam),
    "mu": (float, BASE_CASE.mu),
    "mu_h": (float, None),
    "xi": (float, BASE_CASE.xi),
    "xi_h": (float, BASE_CASE.xi_h),
    "eta": (float, BASE_CASE.eta),
    "eta_h": (float, BASE_CASE.eta_h),
    "semantics": (str, Semantics.PAPER_LITERAL.value),
    "delta": (float, 1e-3),
    "max_iterations": (int, 2**18),
    "residual_target": (float, None),
    "seed": (int, SimConfig.seed),
    "replications": (int, 10),
    "horizon": (float, SimConfig.horizon),
    "warmup": (float, None),
    "confidence": (float, 0.95),
    "track_sojourn": (bool, False),
    "methods": (list, None),
    "oracle_cap": (int, DEFAULT_CAP),
    "threshold": (float, 0.05),
    "axis": (str, "lambda"),
    "values": (list, None),
    "out": (str, None),
    "format": (str, "csv"),
}

_SIM_KEYS = {"seed", "replications", "horizon", "warmup", "confidence", "track_sojourn"}
_SOLVER_KEYS = {"delta", "max_iterations", "residual_target"}
_SWEEP_KEYS = {"axis", "values"}
_USED_BY = {
    "solve": _SOLVER_KEYS,
    "exact": {"oracle_cap"},
    "simulate": _SIM_KEYS,
    "compare": _SOLVER_KEYS | _SIM_KEYS | {"oracle_cap", "threshold", "methods"},
    "sweep": _SOLVER_KEYS | _SIM_KEYS | _SWEEP_KEYS | {"oracle_cap", "methods"},
    "repro": _SOLVER_KEYS | _SIM_KEYS | {"oracle_cap", "methods"},
}
_MODEL_KEYS = {"S", "L", "lambda", "mu", "mu_h", "xi", "xi_h", "eta", "eta_h", "semantics"}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    params: SystemParams
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    methods: tuple[str, ...] = ("iterative",)
    oracle_cap: int = DEFAULT_CAP
    threshold: float = 0.05
    axis: str = "lambda"
    values: list | None = None
    out: str | None = None
    format: str = "csv"
    preset: str | None = None


def _coerce(key: str, value, kind):
    if value is None:
        return None
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if kind is list:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, list):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return value
    raise AssertionError(kind)


def load_config_file(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    return raw


def parse_config(file_values: dict | None = None, overrides: dict | None = None,
                 command: str | None = None, preset_name: str | None = None) -> RunConfig:
    """Merge file values and flag overrides (flags win) into a validated RunConfig."""
    merged: dict = {}
    for source in (file_values or {}, {k: v for k, v in (overrides or {}).items() if v is not None}):
        for key, value in source.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(key, "unknown configuration key")
            merged[key] = _coerce(key, value, CONFIG_KEYS[key][0])
    if command is not None and file_values:
        unused = set(file_values) - _MODEL_KEYS - {"out", "format"} - _USED_BY.get(command, set())
        for key in sorted(unused):
            log.warning("config key %r is not used by %r", key, command)
    v = {k: merged.get(k, default) for k, (_, default) in CONFIG_KEYS.items()}

    if v["semantics"] not in {s.value for s in Semantics}:
        raise ConfigError("semantics", f"expected one of {[s.value for s in Semantics]}")
    try:
        params = validate_params(SystemParams(
            S=v["S"], L=v["L"], lam=v["lambda"], mu=v["mu"], mu_h=v["mu_h"], xi=v["xi"],
            xi_h=v["xi_h"], eta=v["eta"], eta_h=v["eta_h"], semantics=v["semantics"]))
    except ParamError as exc:
        key = {"lam": "lambda"}.get(exc.key, exc.key)
        raise ConfigError(key, str(exc)) from exc
    try:
        solver = SolverConfig(v["delta"], v["max_iterations"], v["residual_target"])
    except ValueError as exc:
        raise ConfigError(str(exc).split()[0], str(exc)) from exc
    try:
        sim = SimConfig(seed=v["seed"], horizon=v["horizon"], warmup=v["warmup"],
                        replications=v["replications"], confidence=v["confidence"],
                        track_sojourn=v["track_sojourn"])
    except ValueError as exc:
        raise ConfigError(str(exc).split()[0], str(exc)) from exc

    if v["methods"] is None:
        methods = ("iterative", "exact", "des") if command == "compare" else ("iterative",)
    else:
        methods = tuple(v["methods"])
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise ConfigError("methods", f"unknown methods {bad}; expected a subset of {list(METHODS)}")
    if v["format"] not in ("csv", "json"):
        raise ConfigError("format", "expected 'csv' or 'json'")
    if v["oracle_cap"] < 1:
        raise ConfigError("oracle_cap", "must be >= 1")
    if not v["threshold"] > 0:
        raise ConfigError("threshold", "must be > 0")
    if preset_name is not None and preset_name not in PRESETS:
        raise ConfigError("preset", f"expected one of {list(PRESETS)}")
    return RunConfig(params, solver, sim, methods, v["oracle_cap"], v["threshold"],
                     v["axis"], v["values"], v["out"], v["format"], preset_name)


# --- output --------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(f"{value:.9g}")
    return value


def render_rows(columns: list[str], rows: list[list], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    else:
        for r in rows:
            buf.write(json.dumps({c: _json_value(v) for c, v in zip(columns, r)}) + "\n")
    return buf.getvalue()


def render_sweep_rows(rows: list[SweepRow], fmt: str = "csv") -> str:
    return render_rows(SweepRow.columns(), [r.values() for r in rows], fmt)


def render_comparison(report: ComparisonReport, fmt: str = "csv") -> str:
    cols = ["method_a", "method_b", "metric", "value_a", "value_b", "relative", "passed", "threshold"]
    rows = [[d.method_a, d.method_b, d.metric, d.value_a, d.value_b, d.relative, d.passed,
             report.threshold] for d in report.discrepancies]
    return render_rows(cols, rows, fmt)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _exit_code(rows: list[SweepRow]) -> int:
    if any(r.error and r.error.startswith("OracleCapExceeded") for r in rows):
        return EXIT_TOO_LARGE
    if any(r.error and r.error.startswith(("ParamError", "ValueError")) for r in rows):
        return EXIT_INVALID
    if any(r.method == "iterative" and r.converged is False for r in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# --- entry point -----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with a flat key/value object")
    flags = [
        ("--s", "S", int), ("--l", "L", int), ("--lambda", "lambda", float), ("--mu", "mu", float),
        ("--mu-h", "mu_h", float), ("--xi", "xi", float), ("--xi-h", "xi_h", float),
        ("--eta", "eta", float), ("--eta-h", "eta_h", float), ("--delta", "delta", float),
        ("--max-iter", "max_iterations", int), ("--residual-target", "residual_target", float),
        ("--seed", "seed", int), ("--replications", "replications", int),
        ("--horizon", "horizon", float), ("--warmup", "warmup", float),
        ("--confidence", "confidence", float), ("--oracle-cap", "oracle_cap", int),
        ("--threshold", "threshold", float), ("--axis", "axis", str),
    ]
    for flag, dest, kind in flags:
        common.add_argument(flag, dest=dest, type=kind, default=None)
    common.add_argument("--semantics", choices=[s.value for s in Semantics], default=None)
    common.add_argument("--methods", default=None, help="comma-separated subset of iterative,exact,des")
    common.add_argument("--values", default=None, help="comma-separated sweep values")
    common.add_argument("--track-sojourn", dest="track_sojourn", action="store_const", const=True,
                        default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="clusterperf", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "exact", "simulate", "compare", "sweep"):
        sub.add_parser(name, parents=[common])
    rp = sub.add_parser("repro", parents=[common])
    rp.add_argument("preset", choices=PRESETS)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if k in CONFIG_KEYS and v is not None}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = parse_config(file_values, overrides, args.command, getattr(args, "preset", None))
    except ConfigError as exc:
        print(f"clusterperf: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if args.command in ("solve", "exact", "simulate"):
        method = {"solve": "iterative", "simulate": "des"}.get(args.command, "exact")
        rows = [evaluate(cfg.params, method, cfg.solver, cfg.sim, cfg.oracle_cap)]
    elif args.command == "compare":
        report = compare(cfg.params, cfg.solver, cfg.sim, cfg.methods, cfg.threshold, cfg.oracle_cap)
        _emit(render_comparison(report, cfg.format), cfg.out)
        code = _exit_code(report.rows)
        if code == EXIT_OK and not report.passed:
            log.warning("discrepancy above threshold %.3g", cfg.threshold)
        return code
    elif args.command == "sweep":
        if not cfg.values:
            print("clusterperf: invalid configuration: values: sweep needs --values", file=sys.stderr)
            return EXIT_INVALID
        try:
            spec = SweepSpec(cfg.params, cfg.axis, cfg.values, cfg.methods, cfg.solver, cfg.sim,
                             cfg.oracle_cap)
        except ValueError as exc:
            print(f"clusterperf: invalid configuration: axis: {exc}", file=sys.stderr)
            return EXIT_INVALID
        rows = run_sweep(spec)
    else:
        specs = preset(cfg.preset, base=cfg.params,
                       methods=cfg.methods, solver=cfg.solver, sim=cfg.sim, oracle_cap=cfg.oracle_cap)
        rows = [r for spec in specs for r in run_sweep(spec)]

    for r in rows:
        if r.error:
            log.error("%s at S=%s L=%s lambda=%s: %s", r.method, r.S, r.L, r.lam, r.error)
    _emit(render_sweep_rows(rows, cfg.format), cfg.out)
    return _exit_code(rows)


if __name__ == "__main__":
    sys.exit(main())
