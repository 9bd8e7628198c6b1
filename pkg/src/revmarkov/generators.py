"""Random test chains, Langevin count matrices and trajectory sampling.

Every generator takes an integer seed and draws from
``numpy.random.default_rng(seed)``, so outputs are reproducible per seed.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import asdict, dataclass

import numpy as np

NORMAL_CLAMP = 1e-6
CHUNK = 1 << 16
KINDS = ("uniform", "normal", "sbm", "multi-ergodic")


def _rows(G):
    return G / G.sum(axis=1, keepdims=True)


def _group_sizes(rng, n):
    """Number of groups uniform in ``{2, ..., n // 2}`` and sizes from distinct cut points."""
    if n < 4:
        return np.array([n]) if n < 2 else np.array([1, n - 1])
    k = int(rng.integers(2, n // 2 + 1))
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False))
    return np.diff(np.concatenate([[0], cuts, [n]]))


def _uniform(rng, n):
    G = rng.uniform(size=(n, n))
    # uniform draws can hit 0.0 exactly; keep the matrix strictly positive
    G[G == 0.0] = np.finfo(float).tiny
    return _rows(G), {}


def _normal(rng, n):
    G = rng.normal(1.0, 1.0, size=(n, n))
    low = G < NORMAL_CLAMP
    G[low] = NORMAL_CLAMP
    return _rows(G), {"clamped": int(low.sum())}


def _sbm(rng, n):
    sizes = _group_sizes(rng, n)
    k = len(sizes)
    R = rng.uniform(size=(k, k))
    np.fill_diagonal(R, 0.0)
    # strict diagonal dominance: each diagonal exceeds its row's off-diagonal sum
    R[np.diag_indices(k)] = 1.0 + R.sum(axis=1)
    density = _rows(R)
    labels = np.repeat(np.arange(k), sizes)
    prob = density[labels[:, None], labels[None, :]]
    adj = (rng.uniform(size=(n, n)) < prob).astype(float)
    np.fill_diagonal(adj, 0.0)
    dangling = adj.sum(axis=1) == 0
    adj[dangling, dangling] = 1.0
    return _rows(adj), {"sizes": sizes.tolist(), "dangling": int(dangling.sum())}


def _multi_ergodic(rng, n):
    sizes = _group_sizes(rng, n)
    A = np.zeros((n, n))
    start = 0
    for s in sizes:
        A[start:start + s, start:start + s] = _uniform(rng, s)[0]
        start += s
    return A, {"sizes": sizes.tolist()}


_BUILDERS = {"uniform": _uniform, "normal": _normal, "sbm": _sbm, "multi-ergodic": _multi_ergodic}


def generate(kind, n, seed):
    """Build a test chain of the given kind.

    Returns
    -------
    A : ndarray of shape (n, n)
    meta : dict
        ``kind``, ``n``, ``seed`` and kind-specific details (group sizes,
        number of clamped normal draws, dangling rows).
    """
    if kind not in _BUILDERS:
        raise ValueError(f"unknown generator kind {kind!r}; choose from {KINDS}")
    A, info = _BUILDERS[kind](np.random.default_rng(seed), int(n))
    return A, {"kind": kind, "n": int(n), "seed": seed, **info}


def gen_uniform(n, seed=None):
    return generate("uniform", n, seed)[0]


def gen_normal(n, seed=None):
    """Rows of ``N(1, 1)`` draws, negative and tiny draws clamped to ``1e-6``."""
    return generate("normal", n, seed)[0]


def gen_sbm(n, seed=None):
    """Random walk on a directed stochastic-block-model graph; dangling rows get a self-loop."""
    return generate("sbm", n, seed)[0]


def gen_multi_ergodic(n, seed=None):
    """Block-diagonal chain with uniform random blocks, one ergodic class per block."""
    return generate("multi-ergodic", n, seed)[0]


@dataclass
class CountMatrix:
    counts: np.ndarray
    total: int
    seed: object = None

    def to_dict(self):
        return {"total": self.total, "seed": self.seed, "n": int(self.counts.shape[0])}


@dataclass
class SdeConfig:
    """Overdamped Langevin dynamics on the circle with a cosine-polynomial potential.

    ``U(x) = a + b cos x + c cos^2 x + d cos^3 x``. The default coefficients
    model the butane dihedral angle.
    """

    a: float = 2.0567
    b: float = -4.0567
    c: float = 0.3133
    d: float = 6.4267
    dt: float = 1e-3
    sigma: float = 1.0
    steps: int = 1_000_000
    bins: int = 30
    seed: int = 0
    x0: float = math.pi

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.bins < 2:
            raise ValueError("need at least two bins")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    def potential(self, x):
        cx = np.cos(x)
        return self.a + self.b * cx + self.c * cx**2 + self.d * cx**3

    def force(self, x):
        """``-U'(x)``."""
        cx = np.cos(x)
        return np.sin(x) * (self.b + 2.0 * self.c * cx + 3.0 * self.d * cx * cx)

    def to_dict(self):
        return asdict(self)


TWO_PI = 2.0 * math.pi


def bin_index(x, bins):
    """Half-open bins ``[2 pi k / M, 2 pi (k+1) / M)`` on the circle."""
    k = int((x % TWO_PI) * bins / TWO_PI)
    return k if k < bins else 0


def simulate_sde(cfg: SdeConfig) -> CountMatrix:
    """Euler-Maruyama trajectory binned into a transition count matrix.

    Noise is drawn in fixed-size chunks from one generator, which yields the
    same stream as a single draw of ``steps`` normals.
    """
    rng = np.random.default_rng(cfg.seed)
    M = cfg.bins
    counts = np.zeros((M, M), dtype=np.int64)
    b, c3, d3 = cfg.b, 2.0 * cfg.c, 3.0 * cfg.d
    dt, noise = cfg.dt, cfg.sigma * math.sqrt(cfg.dt)
    sin, cos = math.sin, math.cos
    scale = M / TWO_PI
    x = cfg.x0 % TWO_PI
    prev = bin_index(x, M)
    flat = counts.reshape(-1)
    done = 0
    while done < cfg.steps:
        m = min(CHUNK, cfg.steps - done)
        eta = (noise * rng.standard_normal(m)).tolist()
        for e in eta:
            cx = cos(x)
            x = (x + sin(x) * (b + c3 * cx + d3 * cx * cx) * dt + e) % TWO_PI
            k = int(x * scale)
            if k >= M:
                k = 0
            flat[prev * M + k] += 1
            prev = k
        done += m
    return CountMatrix(counts, int(cfg.steps), cfg.seed)


def normalize_counts(C):
    """Row-normalize a count matrix after dropping states without outgoing counts.

    Dropping a state can empty another row (all its transitions went to the
    dropped state), so the pruning repeats until every kept row is non-empty.

    Returns
    -------
    A : ndarray
        Stochastic matrix on the kept states.
    visited : ndarray of int
        Original indices of the kept states.
    """
    counts = np.asarray(C.counts if isinstance(C, CountMatrix) else C, dtype=float)
    keep = np.arange(counts.shape[0])
    while True:
        sub = counts[np.ix_(keep, keep)]
        nonempty = sub.sum(axis=1) > 0
        if nonempty.all():
            break
        keep = keep[nonempty]
    if len(keep) == 0:
        return np.zeros((0, 0)), keep
    return _rows(sub), keep


def mh_reversibilize(Q, pi):
    """Metropolis-Hastings chain with proposal ``Q`` and target ``pi``.

    Off-diagonal entries are ``Q_ij min(1, pi_j Q_ji / (pi_i Q_ij))`` (zero
    where ``Q_ij = 0``); the diagonal absorbs the rejected mass.
    """
    Q = np.asarray(Q, dtype=float)
    pi = np.asarray(pi, dtype=float)
    flux = pi[:, None] * Q
    # pi_i P_ij = min(pi_i Q_ij, pi_j Q_ji) is symmetric by construction
    F = np.minimum(flux, flux.T)
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(Q > 0, F / pi[:, None], 0.0)
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))
    return P


def banded_reversible(n=8, bandwidth=1, seed=None, pi=None):
    """Reversible chain with a banded sparsity pattern, built by Metropolis-Hastings.

    The proposal is a random row-stochastic band matrix; ``pi`` defaults to a
    random positive probability vector.
    """
    rng = np.random.default_rng(seed)
    i, j = np.indices((n, n))
    band = np.abs(i - j) <= bandwidth
    Q = np.where(band, rng.uniform(0.1, 1.0, size=(n, n)), 0.0)
    if pi is None:
        pi = rng.uniform(0.5, 1.5, size=n)
    pi = np.asarray(pi, dtype=float) / np.sum(pi)
    return mh_reversibilize(_rows(Q), pi), pi


def sample_dtmc(A, x0, N, seed=None):
    """Inverse-transform simulation of ``N`` transitions started at state ``x0``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    cum = np.cumsum(A, axis=1)
    cum /= cum[:, -1:]
    table = cum.tolist()
    counts = np.zeros((n, n), dtype=np.int64)
    flat = counts.reshape(-1)
    rng = np.random.default_rng(seed)
    x = int(x0)
    done = 0
    while done < N:
        m = min(CHUNK, N - done)
        for u in rng.uniform(size=m).tolist():
            y = bisect_right(table[x], u)
            flat[x * n + y] += 1
            x = y
        done += m
    return CountMatrix(counts, int(N), seed)
