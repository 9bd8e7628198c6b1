"""Solution-quality metrics, the stationary-perturbation lower bound and performance profiles."""

from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, lu_factor, lu_solve

from .exceptions import SingularFundamentalMatrix

RATIO_FLOOR = 1e-18


@dataclass(frozen=True)
class MetricSet:
    """Distances and residuals of a candidate reversible chain.

    Residual norms are max-absolute-entry norms.
    """

    rel_frobenius: float
    detailed_balance_inf: float
    stationarity_inf: float
    stochasticity_inf: float
    wall_time_s: float = 0.0

    def to_dict(self):
        return asdict(self)


def compute_metrics(A, P, pi, wall_time_s=0.0):
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if P.size == 0:
        return MetricSet(0.0, 0.0, 0.0, 0.0, float(wall_time_s))
    nA = np.linalg.norm(A)
    F = pi[:, None] * P
    return MetricSet(
        rel_frobenius=float(np.linalg.norm(A - P) / nA) if nA > 0 else 0.0,
        detailed_balance_inf=float(np.max(np.abs(F - F.T))),
        stationarity_inf=float(np.max(np.abs(pi @ P - pi))),
        stochasticity_inf=float(np.max(np.abs(P.sum(axis=1) - 1.0))),
        wall_time_s=float(wall_time_s),
    )


def _inf_norm(M):
    return float(np.max(np.abs(M).sum(axis=1))) if M.size else 0.0


def perturbation_lower_bound(P, pi, delta):
    """Lower bounds on the change of the reversible projection when ``pi`` moves by ``delta``.

    With ``Z = (I - P^T + pi 1^T)^{-1}`` and induced infinity norms this returns

    * ``|delta| / (|Z^T| |pi + delta|)``, the row/column mirror of the second;
    * ``|delta| / (|Z| |pi + delta|)``, a guaranteed bound for ``|Delta^T|``;

    where ``P + Delta`` is the nearest reversible chain for ``pi + delta``.
    The second value follows from multiplying the difference of the two
    detailed-balance identities by the ones vector. The first is not a
    guaranteed bound for ``|Delta|``: random 10-state instances exist where
    it exceeds the measured change.

    Raises
    ------
    SingularFundamentalMatrix
        ``I - P + 1 pi^T`` is singular, i.e. ``pi`` is not the unique
        stationary vector of ``P``.
    """
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    delta = np.asarray(delta, dtype=float)
    n = len(pi)
    nd = float(np.max(np.abs(delta))) if n else 0.0
    if n <= 1 or nd == 0.0:
        return 0.0, 0.0
    fund = np.eye(n) - P + np.outer(np.ones(n), pi)
    try:
        # singularity is reported through the exception below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(fund, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise SingularFundamentalMatrix(str(exc)) from exc
    if np.min(np.abs(np.diag(lu[0]))) <= np.finfo(float).eps * np.max(np.abs(fund)):
        raise SingularFundamentalMatrix("I - P + 1 pi^T is numerically singular")
    inv = lu_solve(lu, np.eye(n))
    scale = nd / float(np.max(np.abs(pi + delta)))
    return scale / _inf_norm(inv), scale / _inf_norm(inv.T)


def performance_profile(table, taus=None):
    """Performance profiles from a ``{solver: {problem: value}}`` table.

    Lower values are better. Ratios are ``max(t, floor) / max(min_s t, floor)``
    with ``floor = 1e-18`` so exact-zero residuals do not divide by zero.
    Problems missing for a solver count as failures (infinite ratio).

    Returns
    -------
    dict
        ``{solver: (taus, rho)}`` with ``rho`` non-decreasing step values.
    """
    solvers = sorted(table)
    problems = sorted({p for s in solvers for p in table[s]})
    if not problems:
        return {s: (np.array([1.0]), np.array([0.0])) for s in solvers}
    T = np.full((len(solvers), len(problems)), np.inf)
    for i, s in enumerate(solvers):
        for j, p in enumerate(problems):
            if p in table[s] and np.isfinite(table[s][p]):
                T[i, j] = max(float(table[s][p]), RATIO_FLOOR)
    best = T.min(axis=0)
    with np.errstate(invalid="ignore"):
        R = np.where(np.isfinite(T), T / best, np.inf)
    if taus is None:
        finite = R[np.isfinite(R)]
        taus = np.unique(np.concatenate([[1.0], finite]))
    taus = np.asarray(taus, dtype=float)
    out = {}
    for i, s in enumerate(solvers):
        rho = (R[i][None, :] <= taus[:, None]).mean(axis=1)
        out[s] = (taus, rho)
    return out


def write_profile_csv(path, profiles):
    """Write ``{metric: {solver: (taus, rho)}}`` as CSV rows ``solver,metric,tau,rho``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "metric", "tau", "rho"])
        for metric in sorted(profiles):
            for solver in sorted(profiles[metric]):
                taus, rho = profiles[metric][solver]
                for t, r in zip(taus, rho):
                    w.writerow([solver, metric, repr(float(t)), repr(float(r))])
