"""Who-follows-whom graphs, influence weights, and synthetic networks.

Orientation convention used throughout the package:

* ``A[i, j] == 1`` means user ``j`` follows user ``i``, i.e. ``i``'s
  actions show up in ``j``'s feed.  Row ``i`` therefore lists ``i``'s
  followers and ``out_degree[i] = A[i, :].sum()`` is the follower count.
* The influence matrix ``B`` is laid out so that an event in dimension
  ``d`` adds column ``B[:, d]`` to the intensity vector: ``B[v, u]`` is
  the boost user ``u``'s action gives user ``v``, which requires ``v``
  to follow ``u``.  Hence ``B`` may be nonzero only on the support of
  ``A.T``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class SupportError(ValueError):
    """Influence weights placed outside the follow graph's support."""


@dataclass(frozen=True)
class Adjacency:
    """Directed follow graph as a dense 0/1 matrix with an empty diagonal."""

    edges: np.ndarray

    def __init__(self, edges):
        edges = np.asarray(edges)
        if edges.ndim != 2 or edges.shape[0] != edges.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.isin(edges, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(edges) != 0):
            raise ValueError("self-follows are not allowed")
        object.__setattr__(self, "edges", edges.astype(np.int8))

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    def influence_mask(self) -> np.ndarray:
        """Boolean mask of allowed influence entries (support of A.T)."""
        return self.edges.T.astype(bool)


@dataclass(frozen=True)
class Influence:
    """Nonnegative influence weights constrained to the follow graph."""

    weights: np.ndarray

    def __init__(self, weights, adjacency: Adjacency | None = None):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValueError("influence must be square")
        if np.any(weights < 0):
            raise ValueError("influence weights must be nonnegative")
        if adjacency is not None:
            if adjacency.n != weights.shape[0]:
                raise ValueError("dimension mismatch with adjacency")
            bad = (weights != 0) & ~adjacency.influence_mask()
            if bad.any():
                u, v = np.argwhere(bad)[0]
                raise SupportError(
                    f"influence weight at ({u}, {v}) has no supporting follow edge"
                )
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.weights.shape[0]


def kronecker_probability(seed2x2, k: int) -> np.ndarray:
    """Edge probability matrix of the stochastic Kronecker graph on 2**k nodes.

    Entry (i, j) is the product over bit levels of
    ``seed2x2[bit_i(level)][bit_j(level)]``.
    """
    seed2x2 = np.asarray(seed2x2, dtype=float)
    if seed2x2.shape != (2, 2):
        raise ValueError("seed matrix must be 2x2")
    if np.any(seed2x2 < 0) or np.any(seed2x2 > 1):
        raise ValueError("seed entries must be probabilities in [0, 1]")
    if k < 1:
        raise ValueError("k must be >= 1")
    prob = seed2x2.copy()
    for _ in range(k - 1):
        prob = np.kron(prob, seed2x2)
    return prob


def kronecker_generate(seed2x2, k: int, rng: np.random.Generator) -> Adjacency:
    """Sample a directed Kronecker graph; each off-diagonal edge is an
    independent Bernoulli draw, consumed in fixed row-major node order."""
    prob = kronecker_probability(seed2x2, k)
    n = prob.shape[0]
    draws = rng.random((n, n))
    edges = (draws < prob).astype(np.int8)
    np.fill_diagonal(edges, 0)
    return Adjacency(edges)


def feed_projection(adjacency: Adjacency, lam: np.ndarray) -> np.ndarray:
    """Feed intensities: entry j sums the intensities of everyone j follows."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (adjacency.n,):
        raise ValueError(f"expected intensity of length {adjacency.n}")
    return adjacency.edges.T.astype(float) @ lam


def out_degree(adjacency: Adjacency) -> np.ndarray:
    """Follower counts (row sums)."""
    return adjacency.edges.sum(axis=1).astype(float)


def pagerank(
    adjacency: Adjacency,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """PageRank over the follow graph by power iteration.

    The random surfer at user j steps to one of the users j follows
    (column support of ``A``); users j follows nobody teleport uniformly.
    Iterates until the L1 residual drops below ``tol``; the result sums
    to one.
    """
    if not 0 < damping < 1:
        raise ValueError("damping must be in (0, 1)")
    n = adjacency.n
    A = adjacency.edges.astype(float)
    followees = A.sum(axis=0)  # column sums: how many each user follows
    dangling = followees == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        walk = np.where(followees > 0, A / followees, 0.0)  # walk[i, j]: j -> i
    pr = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        new = (1 - damping) / n + damping * (walk @ pr + pr[dangling].sum() / n)
        if np.abs(new - pr).sum() < tol:
            pr = new
            break
        pr = new
    return pr / pr.sum()


def centrality(adjacency: Adjacency, kind: str, damping: float = 0.85) -> np.ndarray:
    """Dispatch for the scores the allocation baselines use."""
    if kind == "pagerank":
        return pagerank(adjacency, damping=damping)
    if kind == "out_degree":
        return out_degree(adjacency)
    raise ValueError(f"unknown centrality kind: {kind}")


def random_influence(
    adjacency: Adjacency,
    low: float,
    high: float,
    rng: np.random.Generator,
) -> Influence:
    """Uniform(low, high) weights on supported entries, zero elsewhere."""
    if not 0 <= low <= high:
        raise ValueError("need 0 <= low <= high")
    draws = rng.uniform(low, high, size=(adjacency.n, adjacency.n))
    weights = np.where(adjacency.influence_mask(), draws, 0.0)
    return Influence(weights, adjacency)


def spectral_radius(matrix: np.ndarray, iters: int = 200) -> float:
    """Spectral radius of a nonnegative matrix by power iteration."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if not matrix.any():
        return 0.0
    v = np.full(n, 1.0 / n)
    rho = 0.0
    for _ in range(iters):
        w = matrix @ v
        norm = w.sum()
        if norm == 0:
            return 0.0
        prev, rho = rho, norm
        v = w / norm
        if abs(rho - prev) <= 1e-12 * max(rho, 1.0):
            break
    return float(rho)


def load_edges(path) -> tuple[Adjacency, Influence | None]:
    """Read an edge-list file: one ``src dst [weight]`` per line, 0-indexed.

    ``src dst`` means dst follows src (influence flows src -> dst).  When
    any line carries a weight, an Influence matrix is returned alongside
    the adjacency and validated against it.
    """
    srcs: list[int] = []
    dsts: list[int] = []
    weights: list[float | None] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#")[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'src dst [weight]'")
            src, dst = int(parts[0]), int(parts[1])
            if src < 0 or dst < 0:
                raise ValueError(f"{path}:{lineno}: negative node id")
            if src == dst:
                raise ValueError(f"{path}:{lineno}: self-follow not allowed")
            srcs.append(src)
            dsts.append(dst)
            weights.append(float(parts[2]) if len(parts) == 3 else None)
    if not srcs:
        raise ValueError(f"{path}: empty graph")
    n = max(max(srcs), max(dsts)) + 1
    edges = np.zeros((n, n), dtype=np.int8)
    edges[srcs, dsts] = 1
    adjacency = Adjacency(edges)
    if all(w is None for w in weights):
        return adjacency, None
    if any(w is None for w in weights):
        warnings.warn("mixed weighted/unweighted lines; missing weights default to 0")
    wmat = np.zeros((n, n))
    for src, dst, w in zip(srcs, dsts, weights):
        wmat[dst, src] = w if w is not None else 0.0
    return adjacency, Influence(wmat, adjacency)


def save_edges(path, adjacency: Adjacency, influence: Influence | None = None):
    """Inverse of :func:`load_edges`."""
    with open(path, "w") as fh:
        for src, dst in np.argwhere(adjacency.edges == 1):
            if influence is not None:
                fh.write(f"{src} {dst} {float(influence.weights[dst, src])!r}\n")
            else:
                fh.write(f"{src} {dst}\n")
