"""Positive symmetric matrices with a fixed Perron vector, under the Fisher metric.

Points are symmetric ``S > 0`` with ``S pi_hat = pi_hat``. Tangent vectors are
symmetric ``xi`` with ``xi pi_hat = 0`` and the metric is
``<xi, eta>_S = sum(xi * eta / S)``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import FactorizationFailure, InputError
from .sinkhorn import balance_symmetric, normalize_to_manifold

POINT_RESIDUAL_TOL = 1e-10
TANGENT_DRIFT_TOL = 1e-10
MIN_ENTRY = 1e-14
EXP_CLAMP = 50.0


def sym(Z):
    return 0.5 * (Z + Z.T)


class ManifoldPoint:
    """A point ``S`` together with the Cholesky factor of its projection system.

    The projection matrix ``diag(S pi) + D S D`` (``D = diag(pi_hat)``) is
    factorized lazily, once, and reused by every projection at this point.

    Parameters
    ----------
    S : ndarray
        Symmetric positive matrix.
    pi_hat : ndarray
        Square root of the stationary distribution.
    min_entry : float
        Smallest admissible entry. User-supplied points are held to
        ``1e-14``; iterates produced by the retraction only need ``S > 0``.
    """

    def __init__(self, S, pi_hat, min_entry=MIN_ENTRY, check=True):
        S = np.asarray(S, dtype=float)
        self.pi_hat = np.asarray(pi_hat, dtype=float)
        if check:
            if S.shape != (len(self.pi_hat),) * 2:
                raise InputError(f"point shape {S.shape} does not match pi of length {len(self.pi_hat)}")
            if not np.array_equal(S, S.T):
                if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.max(np.abs(S))):
                    raise InputError("manifold point must be symmetric")
                S = sym(S)
            low = S.min() if S.size else 1.0
            if not low > min_entry:
                raise InputError(f"manifold point has entry {low!r} <= {min_entry!r}")
            res = self.residual_of(S, self.pi_hat)
            if res > POINT_RESIDUAL_TOL:
                raise InputError(f"S pi_hat != pi_hat (residual {res:.3e})")
        self.S = S

    @staticmethod
    def residual_of(S, pi_hat):
        return float(np.max(np.abs(S @ pi_hat - pi_hat))) if S.size else 0.0

    @property
    def residual(self):
        return self.residual_of(self.S, self.pi_hat)

    @property
    def n(self):
        return self.S.shape[0]

    @cached_property
    def system(self):
        ph = self.pi_hat
        # scaling by the outer product keeps the matrix bitwise symmetric
        return np.diag(self.S @ (ph * ph)) + np.outer(ph, ph) * self.S

    @cached_property
    def chol(self):
        try:
            return cho_factor(self.system, lower=True, check_finite=True)
        except (LinAlgError, ValueError) as exc:
            raise FactorizationFailure(f"projection system is not positive definite: {exc}") from exc

    def solve(self, b):
        return cho_solve(self.chol, b, check_finite=False)


class FixedEigenvectorManifold:
    """Geometry of the reversible-chain search space for a given ``pi_hat``."""

    def __init__(self, pi_hat, sinkhorn_tol=1e-12, sinkhorn_max_iter=10_000):
        self.pi_hat = np.asarray(pi_hat, dtype=float)
        self.pi = self.pi_hat ** 2
        self.n = len(self.pi_hat)
        self.dim = self.n * (self.n - 1) // 2
        self.sinkhorn_tol = sinkhorn_tol
        self.sinkhorn_max_iter = sinkhorn_max_iter

    @property
    def typicaldist(self):
        return np.sqrt(self.dim)

    def point(self, S, **kwargs):
        return ManifoldPoint(S, self.pi_hat, **kwargs)

    def inner(self, X, xi, eta):
        return float(np.sum(xi * eta / X.S))

    def norm(self, X, xi):
        return np.sqrt(max(self.inner(X, xi, xi), 0.0))

    def _normal_factor(self, alpha):
        return np.outer(alpha, self.pi_hat) + np.outer(self.pi_hat, alpha)

    def project(self, X, Z):
        """Fisher-orthogonal projection of a symmetric ``Z`` onto the tangent space."""
        alpha = X.solve(Z @ self.pi_hat)
        return Z - self._normal_factor(alpha) * X.S

    def project_general(self, X, Z):
        return self.project(X, sym(Z))

    def tangent(self, X, xi):
        """Re-project ``xi`` if its constraint residual has drifted."""
        if np.max(np.abs(xi @ self.pi_hat)) > TANGENT_DRIFT_TOL or not np.array_equal(xi, xi.T):
            return self.project_general(X, xi)
        return xi

    def _grad_parts(self, X, G):
        gamma = sym(G * X.S)
        alpha = X.solve(gamma @ self.pi_hat)
        return gamma - self._normal_factor(alpha) * X.S, alpha

    def egrad_to_rgrad(self, X, G):
        return self._grad_parts(X, G)[0]

    def ehess_to_rhess(self, X, G, H, xi, grad_parts=None):
        """Riemannian Hessian along ``xi`` from Euclidean gradient ``G`` and ``H = Hess f[xi]``.

        ``grad_parts`` may carry the ``(grad, alpha)`` pair already computed at
        ``X`` so repeated Hessian products skip one linear solve.
        """
        S, ph = X.S, self.pi_hat
        grad, alpha = grad_parts if grad_parts is not None else self._grad_parts(X, G)
        gamma_dot = H * S + G * xi
        b = sym(gamma_dot) @ ph - (xi @ self.pi) * alpha - ph * (xi @ (ph * alpha))
        alpha_dot = X.solve(b)
        dgrad = gamma_dot - self._normal_factor(alpha_dot) * S - self._normal_factor(alpha) * xi
        return self.project_general(X, dgrad - 0.5 * grad * xi / S)

    def retract(self, X, xi):
        """``normalize(S * exp(xi / S))`` with the exponent clamped to +-50."""
        E = X.S * np.exp(np.clip(xi / X.S, -EXP_CLAMP, EXP_CLAMP))
        S_new = normalize_to_manifold(E, self.pi_hat, self.sinkhorn_tol, self.sinkhorn_max_iter)
        return ManifoldPoint(S_new, self.pi_hat, check=False)

    def random_point(self, seed=None):
        rng = np.random.default_rng(seed)
        Xs = sym(np.abs(rng.standard_normal((self.n, self.n))))
        d = balance_symmetric(Xs, self.pi_hat, self.sinkhorn_tol, self.sinkhorn_max_iter).d
        return ManifoldPoint(np.outer(d, d) * Xs, self.pi_hat)

    def random_tangent(self, X, seed=None):
        rng = np.random.default_rng(seed)
        xi = self.project_general(X, rng.standard_normal((self.n, self.n)))
        nrm = self.norm(X, xi)
        return xi / nrm if nrm > 0 else xi

    def zero(self, X):
        return np.zeros_like(X.S)
