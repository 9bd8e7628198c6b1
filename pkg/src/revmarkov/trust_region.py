"""Riemannian trust-region minimization with a truncated conjugate-gradient inner solver."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import LineSearchStall, NonPositiveEntry
from .manifold import FixedEigenvectorManifold, ManifoldPoint

EPS = np.finfo(float).eps
RADIUS_FLOOR = 1e-12
STALL_LIMIT = 5
BOUNDARY_RATIO = 1e-8

# inner-solver stopping reasons
NEGATIVE_CURVATURE = "negative_curvature"
EXCEEDED_TR = "exceeded_trust_region"
LINEAR = "reached_target_linear"
SUPERLINEAR = "reached_target_superlinear"
MAX_INNER = "max_inner_iterations"
MODEL_INCREASED = "model_increased"


@dataclass
class TrustRegionConfig:
    """Trust-region constants. ``None`` sizes are filled in from ``n``.

    Parameters
    ----------
    grad_tol : float
        Stop once the Riemannian gradient norm is at most this.
    max_outer : int
        Outer iteration cap.
    delta_bar, delta0 : float, optional
        Maximal and initial radius; default ``sqrt(n(n-1)/2)`` and a
        eighth of it.
    rho_prime : float
        Acceptance threshold on the actual/predicted reduction ratio.
    tcg_kappa, tcg_theta : float
        Inner residual target ``|r0| min(kappa, |r0|**theta)``.
    max_inner : int, optional
        Inner iteration cap; defaults to the manifold dimension.
    """

    grad_tol: float = 1e-6
    max_outer: int = 1000
    delta_bar: float | None = None
    delta0: float | None = None
    rho_prime: float = 0.1
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0
    max_inner: int | None = None
    min_inner: int = 1

    def resolved(self, n):
        dim = max(n * (n - 1) // 2, 1)
        delta_bar = self.delta_bar if self.delta_bar is not None else np.sqrt(dim)
        delta0 = self.delta0 if self.delta0 is not None else delta_bar / 8
        cfg = TrustRegionConfig(
            grad_tol=self.grad_tol,
            max_outer=self.max_outer,
            delta_bar=float(delta_bar),
            delta0=float(delta0),
            rho_prime=self.rho_prime,
            tcg_kappa=self.tcg_kappa,
            tcg_theta=self.tcg_theta,
            max_inner=self.max_inner if self.max_inner is not None else dim,
            min_inner=self.min_inner,
        )
        if not 0 < cfg.delta0 <= cfg.delta_bar:
            raise ValueError(f"need 0 < delta0 <= delta_bar, got {cfg.delta0}, {cfg.delta_bar}")
        if not 0 < cfg.rho_prime < 0.25:
            raise ValueError(f"rho_prime must lie in (0, 1/4), got {cfg.rho_prime}")
        return cfg

    def to_dict(self):
        return asdict(self)


@dataclass
class IterationRecord:
    cost: float
    grad_norm: float
    radius: float
    inner_iterations: int
    accepted: bool
    inner_stop: str = ""


@dataclass
class SolveTrace:
    records: list = field(default_factory=list)
    termination: str = ""
    grad_norm: float = float("nan")
    cost: float = float("nan")
    seconds: float = 0.0

    @property
    def iterations(self):
        return len(self.records)

    @property
    def inner_iterations(self):
        return int(sum(r.inner_iterations for r in self.records))

    def to_dict(self, with_records=False):
        out = {
            "termination": self.termination,
            "iterations": self.iterations,
            "inner_iterations": self.inner_iterations,
            "grad_norm": self.grad_norm,
            "cost": self.cost,
            "seconds": self.seconds,
        }
        if with_records:
            out["records"] = [asdict(r) for r in self.records]
        return out


def _truncated_cg(M, X, grad, hess, radius, cfg):
    """Steihaug-Toint truncated CG on the quadratic model at ``X``.

    Returns the step, its Hessian image, the number of inner iterations and
    the stopping reason.
    """
    inner = lambda a, b: M.inner(X, a, b)  # noqa: E731
    eta = M.zero(X)
    Heta = M.zero(X)
    r = grad
    r_r = inner(r, r)
    norm_r0 = np.sqrt(r_r)
    z_r = r_r
    delta = -r
    e_Pe, e_Pd, d_Pd = 0.0, 0.0, z_r
    model_value = 0.0
    stop = MAX_INNER
    j = 0
    for j in range(1, cfg.max_inner + 1):
        Hdelta = hess(delta)
        d_Hd = inner(delta, Hdelta)
        alpha = z_r / d_Hd if d_Hd != 0 else np.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd
        if d_Hd <= 0 or e_Pe_new >= radius * radius:
            tau = (-e_Pd + np.sqrt(e_Pd * e_Pd + d_Pd * (radius * radius - e_Pe))) / d_Pd
            eta = eta + tau * delta
            Heta = Heta + tau * Hdelta
            stop = NEGATIVE_CURVATURE if d_Hd <= 0 else EXCEEDED_TR
            break
        e_Pe = e_Pe_new
        new_eta = eta + alpha * delta
        new_Heta = Heta + alpha * Hdelta
        new_model = inner(new_eta, grad) + 0.5 * inner(new_eta, new_Heta)
        if new_model >= model_value:
            stop = MODEL_INCREASED
            break
        eta, Heta, model_value = new_eta, new_Heta, new_model

        r = M.tangent(X, r + alpha * Hdelta)
        r_r = inner(r, r)
        norm_r = np.sqrt(r_r)
        if j >= cfg.min_inner and norm_r <= norm_r0 * min(norm_r0 ** cfg.tcg_theta, cfg.tcg_kappa):
            stop = LINEAR if cfg.tcg_kappa < norm_r0 ** cfg.tcg_theta else SUPERLINEAR
            break

        zold_rold = z_r
        z_r = r_r
        beta = z_r / zold_rold
        delta = M.tangent(X, -r + beta * delta)
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = z_r + beta * beta * d_Pd
    return eta, Heta, j, stop


def _check_iterate(X):
    if not X.S.min() > 0:
        raise NonPositiveEntry(f"iterate has non-positive entry {X.S.min()!r}")


def minimize(problem, S0, cfg=None):
    """Minimize ``problem.cost`` over the manifold fixed by ``problem.pi_hat``.

    Parameters
    ----------
    problem : ProblemData
    S0 : ManifoldPoint or ndarray
        Starting point on the manifold.
    cfg : TrustRegionConfig, optional

    Returns
    -------
    X : ManifoldPoint
        Final iterate.
    trace : SolveTrace
        ``termination`` is ``"GradientTolerance"``, ``"MaxIterations"`` or
        ``"BoundaryApproach"`` (radius collapsed while the iterate heads for
        the boundary of the positive orthant).

    Raises
    ------
    LineSearchStall
        The radius collapsed at an interior point because predicted
        reductions fell below floating-point resolution of the cost.
    """
    t0 = time.perf_counter()
    cfg = (cfg or TrustRegionConfig()).resolved(problem.n)
    M = FixedEigenvectorManifold(problem.pi_hat)
    X = S0 if isinstance(S0, ManifoldPoint) else M.point(S0)
    trace = SolveTrace()

    def state(X):
        fx = problem.cost(X)
        G = problem.euclidean_grad(X)
        parts = M._grad_parts(X, G)
        return fx, G, parts

    fx, G, parts = state(X)
    grad = parts[0]
    norm_grad = M.norm(X, grad)
    radius = cfg.delta0
    stalls = 0

    while True:
        if norm_grad <= cfg.grad_tol:
            trace.termination = "GradientTolerance"
            break
        if trace.iterations >= cfg.max_outer:
            trace.termination = "MaxIterations"
            break
        if radius < RADIUS_FLOOR:
            if X.S.min() < BOUNDARY_RATIO * X.S.max() or stalls < STALL_LIMIT:
                trace.termination = "BoundaryApproach"
                break
            raise LineSearchStall(
                f"trust region collapsed at an interior point with gradient norm {norm_grad:.3e} "
                f"and cost {fx:.3e}"
            )

        def hess(xi, X=X, G=G, parts=parts):
            return M.ehess_to_rhess(X, G, problem.euclidean_hess_vec(xi), xi, parts)

        eta, Heta, n_inner, stop = _truncated_cg(M, X, grad, hess, radius, cfg)
        X_prop = M.retract(X, eta)
        f_prop = problem.cost(X_prop)

        predicted = -M.inner(X, grad, eta) - 0.5 * M.inner(X, eta, Heta)
        reg = max(1.0, abs(fx)) * EPS * 1e3
        rho_num = fx - f_prop + reg
        rho_den = predicted + reg
        model_decreased = rho_den >= 0
        rho = rho_num / rho_den if rho_den != 0 else np.nan

        if not np.isfinite(rho) or rho < 0.25 or not model_decreased:
            radius /= 4.0
        elif rho > 0.75 and stop in (NEGATIVE_CURVATURE, EXCEEDED_TR):
            radius = min(2.0 * radius, cfg.delta_bar)

        accepted = bool(model_decreased and np.isfinite(rho) and rho > cfg.rho_prime)
        if not accepted and predicted < 1e3 * EPS * abs(fx):
            stalls += 1
        elif accepted:
            stalls = 0
        trace.records.append(IterationRecord(fx, norm_grad, radius, n_inner, accepted, stop))
        if accepted:
            _check_iterate(X_prop)
            X = X_prop
            fx, G, parts = state(X)
            grad = parts[0]
            norm_grad = M.norm(X, grad)

    trace.grad_norm = float(norm_grad)
    trace.cost = float(fx)
    trace.seconds = time.perf_counter() - t0
    return X, trace
