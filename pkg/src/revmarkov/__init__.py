"""Nearest reversible Markov chains by Riemannian trust-region optimization."""

from .datasets import load_southern_women
from .estimator import DykstraProjection, NearestReversible
from .exceptions import (
    InputError,
    NoConvergence,
    NotReversible,
    PartialFailure,
    RevMarkovError,
    SolverError,
)
from .manifold import FixedEigenvectorManifold, ManifoldPoint
from .markov import decompose, stationary_vector, validate_stochastic
from .metrics import MetricSet, compute_metrics, perturbation_lower_bound, performance_profile
from .objective import ProblemData
from .oracle import dykstra_chain, dykstra_nearest
from .pipeline import SolveReport, SolveRequest, nearest_reversible
from .trust_region import TrustRegionConfig, minimize

__version__ = "0.1.0"

__all__ = [
    "DykstraProjection",
    "FixedEigenvectorManifold",
    "InputError",
    "ManifoldPoint",
    "MetricSet",
    "NearestReversible",
    "NoConvergence",
    "NotReversible",
    "PartialFailure",
    "ProblemData",
    "RevMarkovError",
    "SolveReport",
    "SolveRequest",
    "SolverError",
    "TrustRegionConfig",
    "compute_metrics",
    "decompose",
    "dykstra_chain",
    "dykstra_nearest",
    "load_southern_women",
    "minimize",
    "nearest_reversible",
    "perturbation_lower_bound",
    "performance_profile",
    "stationary_vector",
    "validate_stochastic",
]
