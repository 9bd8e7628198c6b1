"""Reference solver: Dykstra's alternating projections onto reversible stochastic matrices.

The feasible set is the intersection of the affine set
``{X : X 1 = 1, D_pi X = X^T D_pi}`` with the nonnegative orthant; Dykstra's
corrections make the iteration converge to the Frobenius projection of the
starting matrix rather than to an arbitrary feasible point.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import InputError, NoConvergence, SingularConstraints
from .markov import (
    StationaryDistribution,
    decompose,
    reassemble,
    stationary_vector,
    validate_stochastic,
)


class AffineProjector:
    """Frobenius projection onto ``{X : X 1 = 1, D_pi X symmetric}``.

    Writing ``W = D_pi X`` the set becomes symmetric ``W`` with ``W 1 = pi``.
    The stationarity conditions give ``W = (B + (l 1^T + 1 l^T)/2) / C`` with
    ``B_ij = Z_ij/pi_i + Z_ji/pi_j`` and ``C_ij = 1/pi_i^2 + 1/pi_j^2``; the
    multipliers ``l`` solve one ``n x n`` SPD system, factorized once per ``pi``.

    Parameters
    ----------
    pi : array-like
        Strictly positive probability vector.
    """

    def __init__(self, pi):
        pi = np.asarray(pi, dtype=float).ravel()
        if not np.all(pi > 0):
            raise InputError("the oracle needs a strictly positive stationary vector")
        self.pi = pi
        inv2 = 1.0 / (pi * pi)
        self.C = inv2[:, None] + inv2[None, :]
        self.K = 1.0 / self.C
        M = self.K.copy()
        M[np.diag_indices_from(M)] += self.K.sum(axis=1)
        try:
            self._chol = cho_factor(M, lower=True)
        except LinAlgError as exc:
            raise SingularConstraints(str(exc)) from exc

    def __call__(self, Z):
        Z = np.asarray(Z, dtype=float)
        pi = self.pi
        B = Z / pi[:, None]
        B = B + B.T
        lam = cho_solve(self._chol, 2.0 * (pi - (B * self.K).sum(axis=1)))
        W = (B + 0.5 * (lam[:, None] + lam[None, :])) * self.K
        return W / pi[:, None]

    def residuals(self, X):
        """``(max|X1 - 1|, max|D_pi X - X^T D_pi|)``."""
        F = self.pi[:, None] * X
        return float(np.max(np.abs(X.sum(axis=1) - 1.0))), float(np.max(np.abs(F - F.T)))


def project_affine(pi, Z):
    return AffineProjector(pi)(Z)


def dykstra_nearest(A, pi, tol=1e-10, max_iter=200_000, projector=None):
    """Nearest reversible stochastic matrix to ``A`` by Dykstra's algorithm.

    Parameters
    ----------
    A : array-like of shape (n, n)
    pi : array-like of shape (n,)
        Strictly positive target stationary distribution.
    tol : float
        Stop once successive nonnegative iterates differ by at most ``tol``
        in Frobenius norm and both affine residuals are at most ``tol``.
    max_iter : int

    Returns
    -------
    ndarray
        The nonnegative iterate.
    """
    A = np.asarray(A, dtype=float)
    proj = projector if projector is not None else AffineProjector(pi)
    x = A.copy()
    # no correction is needed for the affine set, only for the orthant
    q = np.zeros_like(x)
    step = np.inf
    for _ in range(max_iter):
        y = proj(x)
        x_new = np.maximum(y + q, 0.0)
        q = y + q - x_new
        step = np.linalg.norm(x_new - x)
        x = x_new
        if step <= tol and max(proj.residuals(x)) <= tol:
            return x
    raise NoConvergence(max_iter, step, what="Dykstra projection")


def dykstra_chain(A, pi=None, tol=1e-10, max_iter=200_000, transient_tol=None):
    """Oracle counterpart of the full solve: per-class Dykstra, transient rows copied.

    Returns
    -------
    P : ndarray
    pi_used : ndarray
        Stationary vector the classes were projected for, zero on transients.
    """
    A = validate_stochastic(A)
    if pi is None:
        st = stationary_vector(A, transient_tol=transient_tol)
    else:
        st = StationaryDistribution.from_vector(pi, transient_tol)
    dec = decompose(A, st, transient_tol)
    solved = []
    for c, Ac, pc in zip(dec.classes, dec.class_matrices, dec.class_pis):
        solved.append(np.ones((1, 1)) if len(c) == 1 else dykstra_nearest(Ac, pc.pi, tol, max_iter))
    P = reassemble(A, dec.classes, solved)
    pi_used = np.zeros(A.shape[0])
    rec = dec.recurrent
    pi_used[rec] = st.pi[rec]
    return P, pi_used
