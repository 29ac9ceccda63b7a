"""Regenerate the figure/table sweeps as CSV files.

    python3 scripts/run_figures.py --out results/ [--presets fig8 fig11] [--s 50 --l 100]

Each preset is written to ``<out>/<preset>.csv``. ``--s``/``--l`` shrink the
base instance for a quick look; the preset's own series parameter still wins.
"""
import argparse
from pathlib import Path

from clusterperf.cli import render_sweep_rows
from clusterperf.experiment import BASE_CASE, PRESETS, preset, run_sweep
from clusterperf.model import Semantics
from clusterperf.solver import SolverConfig


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--presets", nargs="+", default=list(PRESETS), choices=PRESETS)
    ap.add_argument("--s", type=int, default=None)
    ap.add_argument("--l", type=int, default=None)
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--semantics", choices=[s.value for s in Semantics], default=None)
    args = ap.parse_args(argv)

    base = BASE_CASE
    if args.s is not None:
        base = base.with_(S=args.s)
    if args.l is not None:
        base = base.with_(L=args.l)
    if args.semantics:
        base = base.with_(semantics=args.semantics)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.presets:
        rows = [r for spec in preset(name, base=base, solver=SolverConfig(delta=args.delta))
                for r in run_sweep(spec)]
        (out / f"{name}.csv").write_text(render_sweep_rows(rows))
        print(f"{name}: {len(rows)} rows -> {out / f'{name}.csv'}", flush=True)


if __name__ == "__main__":
    main()
