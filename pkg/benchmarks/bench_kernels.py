"""Compiled vs pure-Python kernels: wall time per replica and output equality.

    python benchmarks/bench_kernels.py [--replicas 400] [--repeat 3] [--json out.json]

Both backends draw the same counter-based streams, so every workload also
checks that their outputs are bit-identical.
"""

import argparse
import json
import platform
import time

import numpy as np

from contactscale import kernels
from contactscale.estimators import bad_point_fraction, simulate_replicas
from contactscale.graphical import generate_events
from contactscale.params import SimParams


def single_site(backend, n):
    p = SimParams(d=1, lam=1.0, horizon=12.0, W=100, seed=1)
    b = simulate_replicas(p, [(0,)], n, [4.0, 8.0, 12.0], backend=backend)
    return b.ext_time.tobytes() + b.sites.tobytes()


def full_window(backend, n):
    p = SimParams(d=1, lam=1.0, horizon=8.0, W=60, seed=2)
    b = simulate_replicas(p, None, n // 10 or 1, [8.0], obs_sites=[(x,) for x in range(-10, 11)],
                          full=True, backend=backend)
    return b.sites.tobytes() + b.contaminated.tobytes()


def two_dim(backend, n):
    p = SimParams(d=2, lam=0.2, horizon=6.0, W=30, seed=3)
    b = simulate_replicas(p, [(0, 0)], n, [6.0], backend=backend)
    return b.ext_time.tobytes() + b.sites.tobytes()


def lambda_paths(backend, n):
    p = SimParams(d=1, lam=1.0, horizon=8.0, W=300, beta=4.0, seed=4)
    return bad_point_fraction(p, n, backend=backend)[3].tobytes()


def eager_events(backend, n):
    p = SimParams(d=1, lam=1.0, horizon=12.0, W=100, seed=5)
    out = b""
    for r in range(max(1, n // 20)):
        out += generate_events(p.replace(replica_index=r), backend=backend).times.tobytes()
    return out


WORKLOADS = {
    "single site, d=1, t=12": (single_site, 1),
    "full window, d=1, t=8": (full_window, 10),
    "single site, d=2, t=6": (two_dim, 1),
    "lambda-path jumps, t=8": (lambda_paths, 1),
    "eager realization, W=100": (eager_events, 20),
}


def best_of(fn, backend, n, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend, n)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--replicas", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json")
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}   python {platform.python_version()}   "
          f"numpy {np.__version__}")
    print(f"{'workload':<28}{'backend':<9}{'seconds':>9}{'us/replica':>12}{'speedup':>9}  equal")
    rows = []
    for name, (fn, per) in WORKLOADS.items():
        res = {b: best_of(fn, b, args.replicas, args.repeat) for b in backends}
        base = res["python"][0]
        ref = res["python"][1]
        units = max(1, args.replicas // per)
        for b in backends:
            secs, out = res[b]
            row = {"workload": name, "backend": b, "seconds": secs,
                   "us_per_replica": 1e6 * secs / units, "speedup": base / secs,
                   "identical": out == ref}
            rows.append(row)
            print(f"{name:<28}{b:<9}{secs:>9.3f}{row['us_per_replica']:>12.1f}"
                  f"{row['speedup']:>8.1f}x  {'yes' if row['identical'] else 'NO'}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"replicas": args.replicas, "repeat": args.repeat, "rows": rows}, fh,
                      indent=1)
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
