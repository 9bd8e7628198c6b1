"""scikit-learn style wrappers around the Riemannian solver and the Dykstra oracle."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ShapeMismatch
from .metrics import compute_metrics
from .oracle import dykstra_chain
from .pipeline import SolveRequest, nearest_reversible
from .trust_region import TrustRegionConfig


def _check_chain(A, pi=None):
    A = check_array(A, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {A.shape}")
    if pi is not None:
        pi = check_array(np.asarray(pi, dtype=float).reshape(1, -1), dtype=np.float64).ravel()
        if len(pi) != A.shape[0]:
            raise ShapeMismatch(f"pi has length {len(pi)}, A is {A.shape[0]}x{A.shape[0]}")
    return A, pi


class NearestReversible(BaseEstimator):
    """Nearest reversible chain in Frobenius norm, by Riemannian trust regions.

    Parameters
    ----------
    recurse_ergodic : bool, default=True
        Solve each ergodic class separately.
    grad_tol : float, default=1e-6
        Riemannian gradient norm at which the solver stops.
    max_outer : int, default=1000
        Outer trust-region iterations per class.
    transient_tol : float, optional
        Stationary mass below which a state is transient; ``1e-12 n`` if None.
    random_init : bool, default=False
        Start from a random manifold point instead of the rebalanced target.
    random_state : int, optional
        Seed used with ``random_init``.

    Attributes
    ----------
    transition_matrix_ : ndarray of shape (n, n)
        The reversible chain.
    stationary_distribution_ : ndarray of shape (n,)
        Distribution it satisfies detailed balance with (zero on transient states).
    metrics_ : MetricSet
    report_ : SolveReport
    n_features_in_ : int

    Examples
    --------
    >>> import numpy as np
    >>> A = np.array([[0.5, 0.5, 0.0], [0.2, 0.3, 0.5], [0.4, 0.1, 0.5]])
    >>> est = NearestReversible().fit(A)
    >>> pi = est.stationary_distribution_
    >>> F = pi[:, None] * est.transition_matrix_
    >>> bool(np.abs(F - F.T).max() < 1e-13)
    True
    """

    def __init__(self, recurse_ergodic=True, grad_tol=1e-6, max_outer=1000,
                 transient_tol=None, random_init=False, random_state=None):
        self.recurse_ergodic = recurse_ergodic
        self.grad_tol = grad_tol
        self.max_outer = max_outer
        self.transient_tol = transient_tol
        self.random_init = random_init
        self.random_state = random_state

    def fit(self, A, pi=None):
        """Solve for ``A``; ``pi`` defaults to the stationary vector of ``A``."""
        A, pi = _check_chain(A, pi)
        req = SolveRequest(
            A=A,
            pi=pi,
            recurse_ergodic=self.recurse_ergodic,
            solver=TrustRegionConfig(grad_tol=self.grad_tol, max_outer=self.max_outer),
            transient_tol=self.transient_tol,
            random_init=self.random_init,
            seed=self.random_state,
        )
        report = nearest_reversible(req)
        self.report_ = report
        self.transition_matrix_ = report.P
        self.stationary_distribution_ = report.pi
        self.metrics_ = report.metrics
        self.n_features_in_ = A.shape[0]
        return self

    def fit_transform(self, A, pi=None):
        return self.fit(A, pi).transition_matrix_

    def score(self, A):
        """Negative Frobenius distance between ``A`` and the fitted chain."""
        check_is_fitted(self)
        A, _ = _check_chain(A)
        return -float(np.linalg.norm(A - self.transition_matrix_))


class DykstraProjection(BaseEstimator):
    """Reference projection by Dykstra's alternating projections.

    Same interface and fitted attributes as :class:`NearestReversible`
    (``report_`` excepted). Classes are projected separately.

    Parameters
    ----------
    tol : float, default=1e-10
    max_iter : int, default=200000
    transient_tol : float, optional
    """

    def __init__(self, tol=1e-10, max_iter=200_000, transient_tol=None):
        self.tol = tol
        self.max_iter = max_iter
        self.transient_tol = transient_tol

    def fit(self, A, pi=None):
        A, pi = _check_chain(A, pi)
        P, pi_used = dykstra_chain(A, pi, self.tol, self.max_iter, self.transient_tol)
        self.transition_matrix_ = P
        self.stationary_distribution_ = pi_used
        self.metrics_ = compute_metrics(A, P, pi_used)
        self.n_features_in_ = A.shape[0]
        return self

    def fit_transform(self, A, pi=None):
        return self.fit(A, pi).transition_matrix_
