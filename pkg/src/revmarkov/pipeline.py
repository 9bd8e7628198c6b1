"""End-to-end nearest reversible chain: transient removal, per-class solves, reassembly."""

from __future__ import annotations

import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NoConvergence, PartialFailure, RevMarkovError, ShapeMismatch
from .manifold import FixedEigenvectorManifold
from .markov import (
    StationaryDistribution,
    detect_transient,
    ergodic_classes,
    reassemble,
    restrict,
    stationary_vector,
    validate_stochastic,
)
from .metrics import compute_metrics
from .objective import ProblemData
from .sinkhorn import normalize_to_manifold
from .trust_region import SolveTrace, TrustRegionConfig, minimize

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PI_CONSISTENCY_TOL = 1e-8
POLISH_TOL = 1e-13


def worker_count(n_tasks):
    """Pool size: available CPUs, capped by ``REVMARKOV_THREADS`` and the task count."""
    cap = os.environ.get("REVMARKOV_THREADS")
    avail = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    if cap:
        try:
            avail = min(avail, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer REVMARKOV_THREADS=%r", cap)
    return max(1, min(avail, n_tasks))


@dataclass
class SolveRequest:
    """Inputs and knobs for :func:`nearest_reversible`.

    Parameters
    ----------
    A : array-like of shape (n, n)
        Row-stochastic matrix.
    pi : array-like, optional
        Stationary distribution. Computed by power iteration when omitted;
        a supplied vector is used as is even if it is not stationary for ``A``.
    recurse_ergodic : bool
        Solve each ergodic class separately instead of one combined problem.
    transient_tol : float, optional
        States with stationary mass below this are transient. Default ``1e-12 n``.
    random_init : bool
        Start from a random manifold point rather than the rebalanced target.
    seed : int
        Seed for ``random_init``.
    """

    A: np.ndarray
    pi: np.ndarray | None = None
    recurse_ergodic: bool = True
    solver: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    transient_tol: float | None = None
    random_init: bool = False
    seed: int = 0


@dataclass
class SolveReport:
    P: np.ndarray
    pi: np.ndarray
    metrics: object
    traces: list
    decomposition: dict
    config: dict
    timings: dict
    pi_inconsistency: float = 0.0
    pi_flagged: bool = False
    class_failures: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "schema": SCHEMA_VERSION,
            "metrics": self.metrics.to_dict(),
            "decomposition": self.decomposition,
            "classes": [t.to_dict() if isinstance(t, SolveTrace) else t for t in self.traces],
            "pi_inconsistency": self.pi_inconsistency,
            "pi_flagged": self.pi_flagged,
            "timings": self.timings,
            "config": self.config,
            "failures": {str(k): v for k, v in self.class_failures.items()},
        }


def _solve_block(A, pi, req):
    """Solve one strictly positive-``pi`` block; returns ``(P, trace)``."""
    n = A.shape[0]
    if n == 1:
        trace = SolveTrace(termination="Trivial", grad_norm=0.0, cost=0.0)
        return np.ones((1, 1)), trace
    problem = ProblemData(A, pi)
    if req.random_init:
        X0 = FixedEigenvectorManifold(problem.pi_hat).random_point(req.seed)
    else:
        X0 = problem.initial_point()
    X, trace = minimize(problem, X0, req.solver)
    # tighten the fixed-vector residual so P's row sums meet round-off level
    try:
        S = normalize_to_manifold(X.S, problem.pi_hat, tol=POLISH_TOL)
    except NoConvergence:
        S = X.S
    return problem.from_manifold(S), trace


def _as_stationary(pi, transient_tol):
    if isinstance(pi, StationaryDistribution):
        return pi
    return StationaryDistribution.from_vector(pi, transient_tol)


def nearest_reversible(req: SolveRequest) -> SolveReport:
    """Nearest (Frobenius) reversible chain with the stationary distribution of ``A``.

    Transient rows are returned unchanged. With ``recurse_ergodic`` each
    closed class is solved independently on a thread pool, otherwise one
    problem is solved on all recurrent states with equal class weights.

    Raises
    ------
    PartialFailure
        One or more classes failed; ``exc.report`` holds the rest.
    """
    t_start = time.perf_counter()
    A = validate_stochastic(req.A)
    n = A.shape[0]
    timings = {}

    t = time.perf_counter()
    if req.pi is None:
        pi = stationary_vector(A, transient_tol=req.transient_tol)
    else:
        pi = _as_stationary(req.pi, req.transient_tol)
        if pi.n != n:
            raise ShapeMismatch(f"pi has length {pi.n}, A is {n}x{n}")
    inconsistency = float(np.max(np.abs(pi.pi @ A - pi.pi))) if n else 0.0
    flagged = req.pi is not None and inconsistency > PI_CONSISTENCY_TOL
    if flagged:
        log.warning("supplied pi is not stationary for A (residual %.3e); using it anyway", inconsistency)
    timings["stationary_s"] = time.perf_counter() - t

    t = time.perf_counter()
    transient = detect_transient(pi, req.transient_tol)
    recurrent = np.setdiff1d(np.arange(n), transient)
    dec = ergodic_classes(A, recurrent, pi) if len(recurrent) else None
    classes = dec.classes if dec is not None else []
    timings["decompose_s"] = time.perf_counter() - t

    if req.recurse_ergodic:
        blocks = classes
        block_pis = dec.class_pis if dec is not None else []
    else:
        if len(classes) > 1:
            warnings.warn(
                f"solving {len(classes)} ergodic classes as one problem; cross-class entries "
                "are driven to zero from the interior, which costs extra iterations",
                RuntimeWarning,
                stacklevel=2,
            )
        blocks = [recurrent] if len(recurrent) else []
        if len(classes) > 1:
            # equal weight per class, each class keeping its own stationary shape
            combined = np.zeros(n)
            for c, cp in zip(classes, dec.class_pis):
                combined[c] = cp.pi / len(classes)
            block_pis = [StationaryDistribution.from_vector(combined[recurrent], transient_tol=0.0)]
        else:
            block_pis = [StationaryDistribution.from_vector(pi.pi[recurrent], transient_tol=0.0)] if blocks else []
    block_mats = [restrict(A, b) for b in blocks]

    t = time.perf_counter()
    solved, traces, failures = [None] * len(blocks), [None] * len(blocks), {}
    with ThreadPoolExecutor(max_workers=worker_count(len(blocks))) as pool:
        futures = [pool.submit(_solve_block, Ab, pb, req) for Ab, pb in zip(block_mats, block_pis)]
        for k, fut in enumerate(futures):
            try:
                solved[k], traces[k] = fut.result()
            except RevMarkovError as exc:
                failures[k] = exc
                solved[k] = block_mats[k]
                traces[k] = {"termination": "Failed", "error": exc.to_dict()}
    timings["solve_s"] = time.perf_counter() - t
    class_seconds = [tr.seconds for tr in traces if isinstance(tr, SolveTrace)]
    timings["class_solve_sum_s"] = float(sum(class_seconds))

    P = reassemble(A, blocks, solved)
    # metrics use the distribution the blocks were solved for, zero on transients
    pi_used = np.zeros(n)
    for b, pb in zip(blocks, block_pis):
        pi_used[b] = pb.pi
    if req.recurse_ergodic:
        pi_used[recurrent] = pi.pi[recurrent]
    timings["total_s"] = time.perf_counter() - t_start
    metrics = compute_metrics(A, P, pi_used, wall_time_s=timings["total_s"])

    decomposition = {
        "n_states": n,
        "n_classes": len(classes),
        "class_sizes": [int(len(c)) for c in classes],
        "transient": [int(i) for i in transient],
        "recurse_ergodic": bool(req.recurse_ergodic),
    }
    config = {
        "solver": req.solver.to_dict(),
        "transient_tol": req.transient_tol,
        "random_init": req.random_init,
        "seed": req.seed,
        "pi_supplied": req.pi is not None,
    }
    report = SolveReport(
        P=P,
        pi=pi_used,
        metrics=metrics,
        traces=traces,
        decomposition=decomposition,
        config=config,
        timings=timings,
        pi_inconsistency=inconsistency,
        pi_flagged=bool(flagged),
        class_failures={k: v.to_dict() for k, v in failures.items()},
    )
    if failures:
        raise PartialFailure(failures, report)
    return report
