"""Squared Frobenius distance to the target chain, expressed on the manifold.

For a reversible ``P`` with stationary vector ``pi`` the matrix
``X = D P D^{-1}`` (``D = diag(pi_hat)``) is symmetric with ``X pi_hat = pi_hat``,
so the search runs over manifold points and maps back with ``P = D^{-1} X D``.
All diagonal scalings are applied as row/column multiplications.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, NotReversible, ShapeMismatch
from .manifold import ManifoldPoint
from .markov import StationaryDistribution, detailed_balance_residual
from .sinkhorn import normalize_to_manifold

REVERSIBILITY_TOL = 1e-12


def _as_matrix(X):
    return X.S if isinstance(X, ManifoldPoint) else np.asarray(X, dtype=float)


@dataclass(frozen=True)
class ProblemData:
    """Target chain ``A`` and the stationary distribution the answer must keep.

    Parameters
    ----------
    A : ndarray of shape (n, n)
        Row-stochastic target.
    pi : StationaryDistribution or array-like
        Strictly positive stationary vector (transient states removed).
    """

    A: np.ndarray
    pi: StationaryDistribution
    scale_left: np.ndarray = field(init=False, repr=False)
    scale_right: np.ndarray = field(init=False, repr=False)
    A_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        pi = self.pi
        if not isinstance(pi, StationaryDistribution):
            pi = StationaryDistribution.from_vector(pi, transient_tol=0.0)
        if A.ndim != 2 or A.shape != (pi.n, pi.n):
            raise ShapeMismatch(f"A has shape {A.shape}, pi has length {pi.n}")
        if not np.all(pi.pi > 0):
            raise InputError("stationary vector must be strictly positive on the solved states")
        ph = pi.pi_hat
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "scale_left", 1.0 / ph)
        object.__setattr__(self, "scale_right", ph)
        object.__setattr__(self, "A_hat", ph[:, None] * A / ph[None, :])

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def pi_hat(self):
        return self.pi.pi_hat

    def cost(self, X_hat):
        R = self.from_manifold(X_hat) - self.A
        return 0.5 * float(np.sum(R * R))

    def euclidean_grad(self, X_hat):
        """``D_pi^{-1} X D_pi - D^{-1} A D``."""
        X = _as_matrix(X_hat)
        p = self.pi.pi
        return X / p[:, None] * p[None, :] - self.A * self.scale_left[:, None] * self.scale_right[None, :]

    def euclidean_hess_vec(self, V):
        """``D_pi^{-1} V D_pi``; the cost is quadratic so this does not depend on the point."""
        p = self.pi.pi
        return np.asarray(V, dtype=float) / p[:, None] * p[None, :]

    def to_manifold(self, B):
        """``D B D^{-1}`` for a chain ``B`` reversible with respect to ``pi``."""
        B = np.asarray(B, dtype=float)
        if B.shape != self.A.shape:
            raise ShapeMismatch(f"B has shape {B.shape}, expected {self.A.shape}")
        res = detailed_balance_residual(B, self.pi.pi)
        if res > REVERSIBILITY_TOL:
            raise NotReversible(res)
        ph = self.pi_hat
        X = ph[:, None] * B / ph[None, :]
        return 0.5 * (X + X.T)

    def from_manifold(self, X_hat):
        """``D^{-1} X D``."""
        X = _as_matrix(X_hat)
        return X * self.scale_left[:, None] * self.scale_right[None, :]

    def initial_point(self, floor_ratio=1e-10, tol=1e-12):
        """Symmetrized, floored and rebalanced image of the target."""
        Y = 0.5 * (self.A_hat + self.A_hat.T)
        Y = np.maximum(Y, floor_ratio * Y.max())
        return normalize_to_manifold(Y, self.pi_hat, tol=tol)
