"""Time the iterative solver on a large instance and report peak memory.

    python3 scripts/timing_large.py --s 1000 --l 2000 [--des]

Prints one JSON object. Run it in a fresh process so ``peak_rss_mb`` reflects
this solve only.
"""
import argparse
import json
import resource
import sys
import time

from clusterperf.des import SimConfig, simulate
from clusterperf.experiment import BASE_CASE
from clusterperf.solver import SolverConfig, solve


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--s", type=int, default=1000)
    ap.add_argument("--l", type=int, default=2000)
    ap.add_argument("--lambda", dest="lam", type=float, default=BASE_CASE.lam)
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--des", action="store_true", help="also time a 10-replication DES run")
    ap.add_argument("--horizon", type=float, default=SimConfig.horizon)
    args = ap.parse_args(argv)

    p = BASE_CASE.with_(S=args.s, L=args.l, lam=args.lam)
    t0 = time.perf_counter()
    _, m, rep = solve(p, SolverConfig(delta=args.delta))
    out = {
        "states": p.n_states,
        "solve_seconds": time.perf_counter() - t0,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "mql": m.mql,
        "thrp": m.thrp,
        # ru_maxrss is in KiB on Linux
        "peak_rss_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024,
    }
    if args.des:
        res = simulate(p, SimConfig(horizon=args.horizon, replications=10))
        out["des_seconds"] = res.wall_time
        out["des_mql"] = res.mql.mean
    json.dump(out, sys.stdout)
    print()


if __name__ == "__main__":
    main()
