"""Command line entry point.

    contactscale simulate  --lambda 1 --W 30 --horizon 5 --initial 0
    contactscale estimate  configs/survival.cfg          # artifacts, exit 0 unless no data
    contactscale test      configs/oracle_check.cfg      # exit 0 iff every test passes
    contactscale oracle    --n 6 --lambda 0.5
    contactscale plotdata  results/oracle-check --kind survival

Exit status: 0 success, 1 a test failed, 2 usage error, 3 insufficient data.
Default output directory: $CONTACTSCALE_OUTPUT_DIR/<experiment> (else ./results).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .config import load_config, parse_initial
from .errors import (ContactScaleError, InsufficientDataError, ParameterError, UsageError,
                     WindowOverflowError)
from .experiments import run_experiment
from .graphical import generate_events
from .oracle import build_chain, spectral_summary
from .params import SimParams
from .process import absorption_time, canonical_form, evolve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NODATA = 0, 1, 2, 3
OUTPUT_ENV = "CONTACTSCALE_OUTPUT_DIR"

# plot kind -> (table name, header)
PLOT_KINDS = {
    "survival": ("survival", ["t", "p_hat", "ci_lo", "ci_hi", "n_surviving"]),
    "tv": ("tv", ["t", "tv"]),
    "void": ("void", ["box", "observed_void", "expected_void"]),
    "scatter": ("scatter", None),  # header depends on the dimension
    "duality": ("duality", ["t", "p_survival", "p_occupied", "z", "contaminated"]),
    "goodpoints": ("goodpoints", ["t", "beta_t", "p_bad", "se", "overflow"]),
}


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps_results(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def emit_plotdata(results: dict, kind: str) -> str:
    """Tidy CSV text of one plot kind from a results dict (header only when absent)."""
    if kind not in PLOT_KINDS:
        raise UsageError(f"unknown plot kind {kind!r}; choose from {sorted(PLOT_KINDS)}")
    name, header = PLOT_KINDS[kind]
    table = (results or {}).get("tables", {}).get(name)
    if table is None:
        return _csv_text(header or ["replica", "x0", "mark_size"], [])
    return _csv_text(table["header"], table["rows"])


def default_output_dir(cfg) -> Path:
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "results")) / cfg.name


def write_artifacts(out: Path, cfg, res, threads, elapsed, keep_raw):
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "experiment": cfg.to_json(),
        "results": res.results,
        "reports": [r.to_json() for r in res.reports],
        "passed": res.passed,
        "tables": {k: {"header": h, "rows": rows} for k, (h, rows) in sorted(res.tables.items())},
    }
    (out / "results.json").write_text(dumps_results(doc))
    # everything that legitimately differs between reruns lives here
    run = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "elapsed_s": elapsed,
           "threads": threads, "backend": kernels.BACKEND, "version": __version__,
           "config_source": cfg.source}
    (out / "run.json").write_text(json.dumps(run, indent=1) + "\n")
    for name, (header, rows) in res.tables.items():
        (out / f"{name}.csv").write_text(_csv_text(header, rows))
    (out / "summary.txt").write_text(
        "\n".join(r.line() for r in res.reports) + ("\n" if res.reports else ""))
    if keep_raw:
        (out / "raw.jsonl").write_text("".join(json.dumps(_clean(r), sort_keys=True) + "\n"
                                               for r in res.raw))
        for name, text in res.files.items():
            (out / name).write_text(text)


def _run(args, enforce_tests: bool) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else default_output_dir(cfg)
    t0 = time.perf_counter()
    res = run_experiment(cfg, threads=args.threads, keep_raw=args.keep_raw)
    elapsed = time.perf_counter() - t0
    write_artifacts(out, cfg, res, args.threads, elapsed, args.keep_raw)
    for r in res.reports:
        print(r.line())
    print(f"wrote {out}")
    if enforce_tests and not res.passed:
        return EXIT_FAIL
    return EXIT_OK


def cmd_simulate(args) -> int:
    d = args.d
    p = SimParams(d=d, lam=args.lam, horizon=args.horizon, W=args.W, seed=args.seed,
                  replica_index=args.replica, ring=args.ring,
                  margin=args.margin if args.margin is not None else (0 if args.ring else None))
    p.require_subcritical()
    A = parse_initial(args.initial, d)
    ev = generate_events(p)
    final = evolve(ev, A, 0.0, p.horizon)
    doc = {"params": p.to_dict(), "initial": [list(a) for a in A],
           "final": final.to_json(), "canonical": canonical_form(final).to_json(),
           "absorption_time": absorption_time(ev, A),
           "boundary_contamination": final.boundary_contamination}
    if args.events:
        ev.to_jsonl(args.events)
    sys.stdout.write(dumps_results(doc))
    return EXIT_OK


def cmd_oracle(args) -> int:
    summ = spectral_summary(build_chain(args.n, args.lam, quotient=not args.full))
    doc = summ.to_json()
    if args.times:
        ts = [float(x) for x in args.times.split(",")]
        doc["survival"] = [[t, float(s)] for t, s in zip(ts, summ.survival(ts))]
    text = dumps_results(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plotdata(args) -> int:
    path = Path(args.results)
    if path.is_dir():
        path = path / "results.json"
    if not path.exists():
        raise UsageError(f"missing results file {path}")
    results = json.loads(path.read_text())
    text = emit_plotdata(results, args.kind)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="contactscale", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="one realisation from a finite initial set")
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--W", type=int, default=0)
    s.add_argument("--ring", type=int)
    s.add_argument("--margin", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replica", type=int, default=0)
    s.add_argument("--initial", default="ball:0", help="ball:r or sites like 0,1;2,3")
    s.add_argument("--events", help="also dump the graphical events as JSON lines")
    s.set_defaults(func=cmd_simulate)

    for name, enforce, hlp in (("estimate", False, "run an experiment and write artifacts"),
                               ("test", True, "run an experiment; exit 1 if a test fails")):
        e = sub.add_parser(name, help=hlp)
        e.add_argument("config")
        e.add_argument("--threads", type=int, default=1)
        e.add_argument("--keep-raw", action="store_true")
        e.add_argument("--out")
        e.set_defaults(func=lambda a, _e=enforce: _run(a, _e))

    o = sub.add_parser("oracle", help="exact spectral summary on a ring")
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--lambda", dest="lam", type=float, required=True)
    o.add_argument("--full", action="store_true", help="no rotation quotient")
    o.add_argument("--times", help="comma separated survival times")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    p = sub.add_parser("plotdata", help="tidy CSV from a results directory or file")
    p.add_argument("results")
    p.add_argument("--kind", required=True, choices=sorted(PLOT_KINDS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except InsufficientDataError as e:
        print(f"insufficient data: {e}", file=sys.stderr)
        return EXIT_NODATA
    except (UsageError, ParameterError, WindowOverflowError, FileNotFoundError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ContactScaleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
