"""Stochastic-matrix validation, stationary vectors and ergodic decomposition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import (
    MassLeak,
    NegativeEntry,
    NoConvergence,
    OpenClass,
    RowSumViolation,
    ShapeMismatch,
)

ROW_SUM_REPAIR_TOL = 1e-9
LEAK_TOL = 1e-12


def default_transient_tol(n):
    return 1e-12 * n


def validate_stochastic(M, repair_tol=ROW_SUM_REPAIR_TOL):
    """Return ``M`` as a float array with unit row sums.

    Rows whose sum is within ``repair_tol`` of one are renormalized; anything
    further off raises :class:`RowSumViolation`. Negative entries raise
    :class:`NegativeEntry`.
    """
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ShapeMismatch("matrix contains non-finite entries")
    neg = np.argwhere(A < 0)
    if len(neg):
        i, j = neg[0]
        raise NegativeEntry(i, j, A[i, j])
    sums = A.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > repair_tol)
    if len(bad):
        raise RowSumViolation(bad[0], sums[bad[0]])
    A /= sums[:, None]
    return A


@dataclass(frozen=True)
class StationaryDistribution:
    """Probability vector together with its entrywise square root."""

    pi: np.ndarray
    pi_hat: np.ndarray
    support: np.ndarray

    @classmethod
    def from_vector(cls, pi, transient_tol=None):
        pi = np.asarray(pi, dtype=float).ravel()
        if np.any(pi < 0):
            # round-off from eigen/power solvers; anything material is an input error
            if pi.min() < -1e-12:
                raise NegativeEntry(int(np.argmin(pi)), 0, pi.min())
            pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
        tol = default_transient_tol(len(pi)) if transient_tol is None else transient_tol
        return cls(pi=pi, pi_hat=np.sqrt(pi), support=np.flatnonzero(pi >= tol))

    @property
    def n(self):
        return len(self.pi)


POLISH_STEPS = 50


def _polish(A, x, res):
    """Keep applying ``A`` while the residual still drops, up to ``POLISH_STEPS`` times."""
    for _ in range(POLISH_STEPS):
        y = x @ A
        y /= y.sum()
        r = np.max(np.abs(y @ A - y))
        if r >= res:
            break
        x, res = y, r
    return x


def stationary_vector(A, tol=1e-13, max_iter=None, damping=0.1, transient_tol=None,
                      max_squarings=64):
    """Limit of ``x^T A^k`` started from the uniform vector.

    Plain power iteration is used first. If the residual stalls (periodic
    classes) the update switches to ``x <- (1-damping) x^T A + damping x^T``.
    When ``max_iter`` iterations are not enough (slowly mixing chains) the
    remaining powers are taken by repeated squaring of the damped matrix,
    which has the same limit.

    Returns
    -------
    StationaryDistribution
        ``pi`` satisfies ``max|pi^T A - pi^T| <= tol`` and sums to one.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if max_iter is None:
        max_iter = 100 * n
    x = np.full(n, 1.0 / n)
    theta = 0.0
    window, last_check = 50, np.inf
    res = np.inf
    for k in range(max_iter):
        xA = x @ A
        res = np.max(np.abs(xA - x))
        if res <= tol:
            return StationaryDistribution.from_vector(_polish(A, x, res), transient_tol)
        if theta == 0.0 and k and k % window == 0:
            if res > 0.5 * last_check:
                theta = damping
            last_check = res
        x = (1.0 - theta) * xA + theta * x if theta else xA
        x /= x.sum()

    M = (1.0 - damping) * A + damping * np.eye(n)
    for _ in range(max_squarings):
        M = M @ M
        M /= M.sum(axis=1, keepdims=True)
        x = x @ M
        x /= x.sum()
        for _ in range(3):
            xA = x @ A
            res = np.max(np.abs(xA - x))
            if res <= tol:
                return StationaryDistribution.from_vector(_polish(A, x, res), transient_tol)
            x = xA / xA.sum()
    raise NoConvergence(max_iter, res, what="stationary vector power iteration")


def detect_transient(pi, transient_tol=None):
    """Indices whose stationary mass is below ``transient_tol``."""
    pi = pi.pi if isinstance(pi, StationaryDistribution) else np.asarray(pi, dtype=float)
    if transient_tol is None:
        transient_tol = default_transient_tol(len(pi))
    return np.flatnonzero(pi < transient_tol)


def restrict(A, idx, leak_tol=LEAK_TOL):
    """Submatrix on ``idx`` with rows renormalized.

    Raises :class:`MassLeak` if some row sends more than ``leak_tol`` of its
    mass outside ``idx``.
    """
    A = np.asarray(A, dtype=float)
    idx = np.asarray(idx, dtype=int)
    sub = A[np.ix_(idx, idx)]
    leak = 1.0 - sub.sum(axis=1)
    worst = int(np.argmax(leak)) if len(leak) else 0
    if len(leak) and leak[worst] > leak_tol:
        raise MassLeak(idx[worst], leak[worst])
    return sub / sub.sum(axis=1, keepdims=True)


@dataclass
class ErgodicDecomposition:
    """Ergodic classes (closed strongly connected components) plus transient states."""

    permutation: np.ndarray
    classes: list
    transient: np.ndarray
    class_matrices: list = field(default_factory=list)
    class_pis: list = field(default_factory=list)

    @property
    def recurrent(self):
        if not self.classes:
            return np.array([], dtype=int)
        return np.sort(np.concatenate(self.classes))

    def summary(self):
        return {
            "n_states": int(len(self.permutation)),
            "n_classes": len(self.classes),
            "class_sizes": [int(len(c)) for c in self.classes],
            "transient": [int(t) for t in self.transient],
        }


def ergodic_classes(A, recurrent, pi=None, leak_tol=LEAK_TOL):
    """Split the recurrent states of ``A`` into ergodic classes.

    Each strongly connected component of the graph ``i -> j iff A_ij > 0``
    restricted to ``recurrent`` must be closed in the full chain, otherwise
    :class:`OpenClass` is raised. Classes are ordered by their smallest state.
    If ``pi`` is given, per-class stationary vectors are its normalized
    restrictions; otherwise they are computed by power iteration.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    recurrent = np.sort(np.asarray(recurrent, dtype=int))
    transient = np.setdiff1d(np.arange(n), recurrent)
    sub = A[np.ix_(recurrent, recurrent)]
    n_comp, labels = connected_components(csr_matrix(sub > 0), directed=True, connection="strong")
    classes = [recurrent[labels == c] for c in range(n_comp)]
    classes.sort(key=lambda c: c[0])

    class_matrices, class_pis = [], []
    for c in classes:
        outside = np.ones(n, dtype=bool)
        outside[c] = False
        leaked = A[np.ix_(c, np.flatnonzero(outside))].sum(axis=1) if outside.any() else np.zeros(len(c))
        if len(leaked) and leaked.max() > leak_tol:
            raise OpenClass(c, leaked.max())
        Ac = restrict(A, c, leak_tol)
        class_matrices.append(Ac)
        if pi is not None:
            p = np.asarray(pi.pi if isinstance(pi, StationaryDistribution) else pi, dtype=float)[c]
            class_pis.append(StationaryDistribution.from_vector(p, transient_tol=0.0))
        else:
            class_pis.append(stationary_vector(Ac, transient_tol=0.0))

    permutation = np.concatenate(classes + [transient]).astype(int) if n else np.array([], int)
    return ErgodicDecomposition(permutation, classes, transient, class_matrices, class_pis)


def decompose(A, pi=None, transient_tol=None):
    """Transient detection followed by the ergodic-class split."""
    A = np.asarray(A, dtype=float)
    if pi is None:
        pi = stationary_vector(A, transient_tol=transient_tol)
    elif not isinstance(pi, StationaryDistribution):
        pi = StationaryDistribution.from_vector(pi, transient_tol)
    transient = detect_transient(pi, transient_tol)
    recurrent = np.setdiff1d(np.arange(A.shape[0]), transient)
    return ergodic_classes(A, recurrent, pi)


def reassemble(A, blocks, solved):
    """Place solved blocks back into an ``n x n`` matrix.

    Rows not covered by any block are transient and copied verbatim from
    ``A``; every other entry outside the diagonal blocks is zero.
    """
    A = np.asarray(A, dtype=float)
    if len(blocks) != len(solved):
        raise ShapeMismatch(f"{len(blocks)} blocks but {len(solved)} solutions")
    P = np.zeros_like(A)
    covered = np.zeros(A.shape[0], dtype=bool)
    for idx, S in zip(blocks, solved):
        idx = np.asarray(idx, dtype=int)
        S = np.asarray(S, dtype=float)
        if S.shape != (len(idx), len(idx)):
            raise ShapeMismatch(f"block of size {len(idx)} got solution of shape {S.shape}")
        P[np.ix_(idx, idx)] = S
        covered[idx] = True
    P[~covered] = A[~covered]
    return P


def detailed_balance_residual(P, pi):
    """``max |D_pi P - P^T D_pi|``."""
    F = np.asarray(pi)[:, None] * np.asarray(P)
    return float(np.max(np.abs(F - F.T))) if F.size else 0.0
