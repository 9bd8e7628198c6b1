"""Diagonal scaling of positive matrices onto the fixed-eigenvector set.

Both routines work on the scaled matrix ``Ahat = D A D`` with ``D = diag(pi_hat)``,
whose target row (and column) sums are ``pi = pi_hat**2``. A positive scaling
that gives ``Ahat`` row sums ``pi`` is exactly a scaling that makes ``pi_hat`` a
fixed vector of ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import NoConvergence, NonPositiveEntry

ENTRY_FLOOR = 1e-300
NEWTON_AFTER = 200


@dataclass(frozen=True)
class ScalingResult:
    d: np.ndarray
    iterations: int
    residual: float


def _prepare(A):
    A = np.array(A, dtype=float, copy=True)
    if not np.all(np.isfinite(A)):
        raise NonPositiveEntry("matrix has non-finite entries")
    if np.any(A < 0):
        i, j = np.argwhere(A < 0)[0]
        raise NonPositiveEntry(f"entry ({i}, {j}) = {A[i, j]!r} is negative")
    np.maximum(A, ENTRY_FLOOR, out=A)
    return A


def _newton_symmetric(Ahat, pi, e, tol, max_iter):
    """Newton's method on the convex potential ``0.5 x^T Ahat x - pi . log x`` in ``u = log x``.

    Its Hessian ``diag(B 1) + B`` with ``B = D_x Ahat D_x`` is positive
    definite, so the iteration stays well posed when the fixed-point update
    slows down (near-periodic structure).
    """
    u = np.log(e)
    rel = np.inf
    for it in range(max_iter):
        x = np.exp(u)
        Ax = Ahat @ x
        F = x * Ax - pi
        rel = np.max(np.abs(F / pi))
        if rel <= tol:
            return x, it, rel
        H = x[:, None] * Ahat * x[None, :]
        H[np.diag_indices_from(H)] += x * Ax
        try:
            du = -cho_solve(cho_factor(H, lower=True), F)
        except LinAlgError:
            break
        if rel > 1e-6:
            phi0 = 0.5 * x @ Ax - pi @ u
            slope = F @ du
            t = 1.0
            # overlong trial steps overflow to inf and are simply rejected
            with np.errstate(over="ignore", invalid="ignore"):
                while t > 1e-12:
                    xn = np.exp(u + t * du)
                    if 0.5 * xn @ (Ahat @ xn) - pi @ (u + t * du) <= phi0 + 1e-4 * t * slope:
                        break
                    t *= 0.5
            u = u + t * du
        else:
            u = u + du
    raise NoConvergence(max_iter, rel, what="Newton symmetric balancing")


def _balance(Ahat, pi, tol, max_iter, newton_after=NEWTON_AFTER):
    """Scaling ``e`` with ``diag(e) Ahat diag(e) 1 = pi`` to relative accuracy ``tol``."""
    e = np.ones(len(pi))
    rel = np.inf
    for it in range(min(max_iter, newton_after) + 1):
        s = Ahat @ e
        rel_vec = e * s / pi - 1.0
        rel = np.max(np.abs(rel_vec))
        if rel <= tol:
            return e, it
        if it == max_iter:
            break
        e = np.sqrt(e * pi / s)
    if max_iter > newton_after:
        x, extra, rel = _newton_symmetric(Ahat, pi, e, tol, max_iter - newton_after)
        return x, newton_after + extra
    raise NoConvergence(max_iter, rel, what="symmetric Sinkhorn balancing")


def balance_symmetric(A, pi_hat, tol=1e-12, max_iter=10_000):
    """Find ``d > 0`` with ``diag(d) A diag(d) pi_hat = pi_hat``.

    Uses the damped fixed point ``e <- sqrt(e * pi / (Ahat e))``; the undamped
    update can oscillate between two scalings on symmetric problems. If it has
    not converged after a few hundred sweeps the remaining budget goes to
    Newton steps on the same equations. Convergence is declared on the
    relative row-sum error, which bounds the absolute residual
    ``max|D A D pi_hat - pi_hat|`` reported in the result.
    """
    A = _prepare(A)
    pi_hat = np.asarray(pi_hat, dtype=float)
    if np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(A)):
        raise ValueError("balance_symmetric needs a symmetric matrix")
    pi = pi_hat * pi_hat
    Ahat = pi_hat[:, None] * A * pi_hat[None, :]
    e, it = _balance(Ahat, pi, tol, max_iter)
    residual = np.max(np.abs(pi_hat * (e * (Ahat @ e) / pi - 1.0)))
    return ScalingResult(e, it, float(residual))


def normalize_to_manifold(Y, pi_hat, tol=1e-12, max_iter=10_000):
    """Map a positive matrix to a symmetric ``S > 0`` with ``S pi_hat = pi_hat``.

    Two-sided Sinkhorn on ``Ahat = D Y D`` yields ``D1 Ahat D2`` with both
    marginals ``pi``; the average with its transpose is symmetric by
    construction and keeps the marginals, and undoing the outer scaling gives
    the manifold point. For symmetric ``Y`` the two scalings coincide up to a
    constant, so the symmetric balancing is used instead; it avoids the slow
    mode of the two-sided iteration on nearly block-diagonal inputs.
    """
    Y = _prepare(Y)
    pi_hat = np.asarray(pi_hat, dtype=float)
    pi = pi_hat * pi_hat
    outer = pi_hat[:, None] * pi_hat[None, :]
    Ahat = outer * Y
    if np.array_equal(Y, Y.T):
        e, _ = _balance(Ahat, pi, tol, max_iter)
        X = e[:, None] * Ahat * e[None, :]
        # the two rounding orders of e_i A_ij e_j differ in the last bit
        return 0.5 * (X + X.T) / outer
    c = np.ones(len(pi))
    rel = np.inf
    for it in range(max_iter):
        r = pi / (Ahat @ c)
        c = pi / (Ahat.T @ r)
        rel_rows = np.max(np.abs(r * (Ahat @ c) / pi - 1.0))
        # symmetrizing halves the row error, so test the cheap estimate first
        if 0.5 * rel_rows <= tol:
            X = r[:, None] * Ahat * c[None, :]
            X = 0.5 * (X + X.T)
            S = X / outer
            rel = np.max(np.abs((S @ pi_hat) / pi_hat - 1.0))
            if rel <= tol:
                return S
        else:
            rel = 0.5 * rel_rows
    raise NoConvergence(max_iter, rel, what="two-sided Sinkhorn normalization")
