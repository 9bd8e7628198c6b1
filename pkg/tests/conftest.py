"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from revmarkov.generators import mh_reversibilize

_ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def second_order_curve(M, X, xi, t):
    """Point at parameter ``t`` on a curve with velocity ``xi`` and zero covariant acceleration.

    The manifold is an open subset of an affine space, so ``S + t xi + t^2/2 c``
    stays on it for small ``t`` whenever ``c`` is tangent. Choosing
    ``c = Pi_S(xi o xi / (2 S))`` cancels the Fisher-metric Christoffel term.
    """
    return X.S + second_order_step(M, X, xi, t)


def second_order_step(M, X, xi, t):
    """Displacement ``gamma(t) - S`` of :func:`second_order_curve`, formed without subtracting ``S``."""
    c = M.project(X, xi * xi / (2.0 * X.S))
    return t * xi + 0.5 * t * t * c


def five_state_chain():
    """States 0..2 form one closed class; 3 and 4 are transient and drain into it."""
    return np.array([
        [0.2, 0.5, 0.3, 0.0, 0.0],
        [0.4, 0.1, 0.5, 0.0, 0.0],
        [0.3, 0.3, 0.4, 0.0, 0.0],
        [0.1, 0.0, 0.2, 0.3, 0.4],
        [0.0, 0.3, 0.0, 0.5, 0.2],
    ])


def random_reversible(n, seed, density=1.0):
    """Metropolis-Hastings chain with random proposal and random target."""
    rng = np.random.default_rng(seed)
    Q = rng.uniform(0.05, 1.0, size=(n, n))
    if density < 1.0:
        Q *= rng.uniform(size=(n, n)) < density
        np.fill_diagonal(Q, 1.0)
    Q /= Q.sum(axis=1, keepdims=True)
    pi = rng.uniform(0.5, 1.5, size=n)
    pi /= pi.sum()
    return mh_reversibilize(Q, pi), pi


@pytest.fixture
def five_state():
    return five_state_chain()
