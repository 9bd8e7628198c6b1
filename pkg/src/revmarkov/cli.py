"""Command-line interface: ``revmarkov {solve,generate,simulate,oracle,bench,decompose}``.

Exit codes: 0 success, 2 invalid input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import InputError, PartialFailure, RevMarkovError, SolverError
from .generators import KINDS, SdeConfig, generate, normalize_counts, simulate_sde
from .io import FORMATS, read_matrix, read_vector, write_json, write_matrix
from .markov import decompose, validate_stochastic
from .metrics import compute_metrics, performance_profile, write_profile_csv
from .oracle import dykstra_chain
from .pipeline import SCHEMA_VERSION, SolveRequest, nearest_reversible, worker_count
from .trust_region import TrustRegionConfig

log = logging.getLogger("revmarkov")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
METRIC_NAMES = ("rel_frobenius", "detailed_balance_inf", "stationarity_inf", "stochasticity_inf", "wall_time_s")
SOLVERS = ("riemann", "dykstra")


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _objective(A, P):
    return 0.5 * float(np.sum((A - P) ** 2))


def cmd_solve(args):
    A, fmt = read_matrix(args.input)
    pi = read_vector(args.pi) if args.pi else None
    cfg = TrustRegionConfig(grad_tol=args.grad_tol, max_outer=args.max_outer)
    req = SolveRequest(
        A=A, pi=pi, recurse_ergodic=args.recurse_ergodic, solver=cfg,
        transient_tol=args.transient_tol, random_init=args.random_init, seed=args.seed,
    )
    status = EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            report = nearest_reversible(req)
    except PartialFailure as exc:
        report, status = exc.report, EXIT_SOLVER
        log.error("%s", exc)
    out_fmt = args.format or fmt
    write_matrix(args.output, report.P, out_fmt)
    # metrics from the file as written, so serialization loss would show up
    P_disk, _ = read_matrix(args.output, out_fmt)
    A_valid = validate_stochastic(A)
    metrics = compute_metrics(A_valid, P_disk, report.pi, wall_time_s=report.metrics.wall_time_s)
    doc = report.to_dict()
    doc["metrics"] = metrics.to_dict()
    doc["objective"] = _objective(A_valid, P_disk)
    doc["input"] = str(args.input)
    doc["seed"] = args.seed
    if status != EXIT_OK:
        doc["error"] = PartialFailure(report.class_failures).to_dict()
    if args.report:
        write_json(args.report, doc)
    print(json.dumps({"metrics": doc["metrics"], "objective": doc["objective"]}))
    return status


def cmd_generate(args):
    A, meta = generate(args.kind, args.n, args.seed)
    write_matrix(args.output, A, args.format)
    print(json.dumps(meta))
    return EXIT_OK


def cmd_simulate(args):
    if args.coeffs:
        try:
            a, b, c, d = (float(v) for v in args.coeffs.split(","))
        except ValueError:
            raise InputError(f"--coeffs needs four comma-separated numbers, got {args.coeffs!r}")
    else:
        a, b, c, d = SdeConfig.a, SdeConfig.b, SdeConfig.c, SdeConfig.d
    cfg = SdeConfig(a=a, b=b, c=c, d=d, dt=args.dt, sigma=args.sigma, steps=args.steps,
                    bins=args.bins, seed=args.seed)
    C = simulate_sde(cfg)
    if args.output_counts:
        write_matrix(args.output_counts, C.counts, args.format)
    A, visited = normalize_counts(C)
    if args.output_matrix:
        write_matrix(args.output_matrix, A, args.format)
    print(json.dumps({"config": cfg.to_dict(), "total": C.total, "visited": visited.tolist()}))
    return EXIT_OK


def cmd_oracle(args):
    A, fmt = read_matrix(args.input)
    pi = read_vector(args.pi) if args.pi else None
    t0 = time.perf_counter()
    P, pi_used = dykstra_chain(A, pi, tol=args.tol, max_iter=args.max_iter, transient_tol=args.transient_tol)
    elapsed = time.perf_counter() - t0
    write_matrix(args.output, P, args.format or fmt)
    A = validate_stochastic(A)
    print(json.dumps({"metrics": compute_metrics(A, P, pi_used, elapsed).to_dict(), "objective": _objective(A, P)}))
    return EXIT_OK


def cmd_decompose(args):
    A, _ = read_matrix(args.input)
    dec = decompose(validate_stochastic(A), transient_tol=args.transient_tol)
    summary = dec.summary()
    summary["classes"] = [c.tolist() for c in dec.classes]
    print(json.dumps(summary))
    return EXIT_OK


def read_suite(path):
    """Suite file: JSON list of ``{"kind", "n", "seed"}`` objects, or CSV with those columns."""
    text = Path(path).read_text()
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(text.splitlines()))
    try:
        return [(str(r["kind"]), int(r["n"]), int(r["seed"])) for r in rows]
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad suite entry in {path}: {exc}") from exc


def _bench_one(entry, solver, repeat, run_dir):
    kind, n, seed = entry
    A, _ = generate(kind, n, seed)
    name = f"{solver}_{kind}_{n}_{seed}_{repeat}"
    row = {"solver": solver, "kind": kind, "n": n, "seed": seed, "repeat": repeat, "status": "ok"}
    t0 = time.perf_counter()
    try:
        if solver == "riemann":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                report = nearest_reversible(SolveRequest(A=A))
            P, pi = report.P, report.pi
        else:
            P, pi = dykstra_chain(A)
    except RevMarkovError as exc:
        row["status"] = type(exc).__name__
        return row
    elapsed = time.perf_counter() - t0
    path = run_dir / f"{name}.mtx"
    write_matrix(path, P, "mtx")
    P_disk, _ = read_matrix(path)
    row.update(compute_metrics(A, P_disk, pi, elapsed).to_dict())
    row["objective"] = _objective(A, P_disk)
    write_json(run_dir / f"{name}.json", row)
    return row


def cmd_bench(args):
    suite = read_suite(args.suite)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = set(solvers) - set(SOLVERS)
    if unknown:
        raise InputError(f"unknown solver(s) {sorted(unknown)}; choose from {SOLVERS}")
    for kind, _, _ in suite:
        if kind not in KINDS:
            raise InputError(f"unknown generator kind {kind!r} in suite")
    out = Path(args.out_dir)
    run_dir = out / "runs"
    run_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(e, s, r) for e in suite for s in solvers for r in range(args.repeats)]
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        rows = list(pool.map(lambda job: _bench_one(job[0], job[1], job[2], run_dir), jobs))

    fields = ["solver", "kind", "n", "seed", "repeat", "status", *METRIC_NAMES, "objective"]
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})

    # best (smallest) value over repeats per problem, failures left out
    profiles = {}
    for metric in METRIC_NAMES:
        table = {s: {} for s in solvers}
        for row in rows:
            if row["status"] != "ok":
                continue
            key = (row["kind"], row["n"], row["seed"])
            prev = table[row["solver"]].get(key, np.inf)
            table[row["solver"]][key] = min(prev, row[metric])
        profiles[metric] = performance_profile(table)
    write_profile_csv(out / "profile.csv", profiles)
    print(json.dumps({"runs": len(rows), "failed": sum(r["status"] != "ok" for r in rows),
                      "out_dir": str(out)}))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="revmarkov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="nearest reversible chain of a matrix file")
    s.add_argument("--input", required=True)
    s.add_argument("--pi", help="stationary distribution file (vector)")
    s.add_argument("--recurse-ergodic", type=_bool, default=True, metavar="BOOL")
    s.add_argument("--grad-tol", type=float, default=1e-6)
    s.add_argument("--max-outer", type=int, default=1000)
    s.add_argument("--transient-tol", type=float)
    s.add_argument("--random-init", type=_bool, nargs="?", const=True, default=False, metavar="BOOL")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", required=True)
    s.add_argument("--report")
    s.add_argument("--format", choices=FORMATS, help="output format (default: same as input)")
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="random test chain")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.add_argument("--format", choices=FORMATS, default="mtx")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("simulate", help="Langevin count matrix on the circle")
    pot = m.add_mutually_exclusive_group()
    pot.add_argument("--potential", choices=("butane",), default="butane")
    pot.add_argument("--coeffs", help="a,b,c,d of U(x) = a + b cos x + c cos^2 x + d cos^3 x")
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--sigma", type=float, default=1.0)
    m.add_argument("--steps", type=int, default=1_000_000)
    m.add_argument("--bins", type=int, default=30)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--output-counts")
    m.add_argument("--output-matrix")
    m.add_argument("--format", choices=FORMATS, default="mtx")
    m.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", help="Dykstra reference projection")
    o.add_argument("--input", required=True)
    o.add_argument("--pi")
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--max-iter", type=int, default=200_000)
    o.add_argument("--transient-tol", type=float)
    o.add_argument("--output", required=True)
    o.add_argument("--format", choices=FORMATS)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run a suite and write metric and profile CSVs")
    b.add_argument("--suite", required=True)
    b.add_argument("--solvers", default="riemann,dykstra")
    b.add_argument("--out-dir", required=True)
    b.add_argument("--repeats", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("decompose", help="print ergodic classes and transient states")
    d.add_argument("--input", required=True)
    d.add_argument("--transient-tol", type=float)
    d.set_defaults(func=cmd_decompose)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        return _fail(args, exc, EXIT_INPUT)
    except SolverError as exc:
        return _fail(args, exc, EXIT_SOLVER)


def _fail(args, exc, code):
    err = exc.to_dict() if isinstance(exc, RevMarkovError) else {"type": type(exc).__name__, "message": str(exc)}
    print(json.dumps({"error": err}), file=sys.stderr)
    report = getattr(args, "report", None)
    if report:
        try:
            write_json(report, {"schema": SCHEMA_VERSION, "error": err})
        except OSError:
            pass
    return code


if __name__ == "__main__":
    sys.exit(main())
