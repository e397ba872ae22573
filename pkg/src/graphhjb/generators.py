"""Random and hand-built test instances: chains, digraphs, kernels, kernel families."""

import numpy as np

from .graph import Boundary, Graph, KernelFamily, TransitionKernel


def chain_graph(n, weight=1.0):
    """Path graph ``x1 - x2 - ... - xn`` with symmetric constant weights."""
    w = np.zeros((n, n))
    i = np.arange(n - 1)
    w[i, i + 1] = weight
    w[i + 1, i] = weight
    return Graph(w)


def walk_kernel(n):
    """Symmetric random walk on a path; endpoints step inward."""
    k = np.zeros((n, n))
    k[0, 1] = k[n - 1, n - 2] = 1.0
    for i in range(1, n - 1):
        k[i, i - 1] = k[i, i + 1] = 0.5
    return TransitionKernel(k)


def shift_kernel(n, direction):
    """Deterministic move one step left (``-1``) or right (``+1``) on a path, clamped at the ends."""
    k = np.zeros((n, n))
    for i in range(n):
        j = min(max(i + direction, 0), n - 1)
        if j == i:
            j = i - direction
        k[i, j] = 1.0
    return TransitionKernel(k)


def left_right_family(n):
    """Family ``{go-left, go-right}`` of deterministic shifts on an ``n``-chain."""
    return KernelFamily([shift_kernel(n, -1), shift_kernel(n, +1)])


def _ranks(n, boundary, rng):
    """Random ranking with the boundary at rank 0 and distinct positive ranks inside."""
    rank = np.zeros(n, dtype=int)
    inner = np.setdiff1d(np.arange(n), list(boundary))
    rank[rng.permutation(inner)] = np.arange(1, len(inner) + 1)
    return rank


def random_boundary(n, rng, size=None):
    if size is None:
        size = int(rng.integers(1, min(max(1, n // 3), n - 1) + 1))
    return Boundary(tuple(rng.choice(n, size=size, replace=False).tolist()), n)


def random_digraph(n, rng, boundary, density=0.3, low=0.1, high=1.0, symmetric=False):
    """Random weighted digraph in which every vertex is connected to the boundary.

    Each interior vertex gets a positive-weight edge from a vertex of lower
    rank, so the inbound path distance to the boundary is finite everywhere.
    Extra edges are added with probability ``density``.
    """
    w = np.where(rng.random((n, n)) < density, rng.uniform(low, high, (n, n)), 0.0)
    rank = _ranks(n, boundary, rng)
    for x in np.flatnonzero(rank > 0):
        lower = np.flatnonzero(rank < rank[x])
        y = rng.choice(lower)
        w[y, x] = rng.uniform(low, high)
    if symmetric:
        w = np.maximum(w, w.T)
    np.fill_diagonal(w, 0.0)
    return Graph(w)


def random_kernel(n, rng, boundary, density=0.5, no_self_loops=True):
    """Random row-stochastic kernel with a finite expected exit time.

    Every interior row puts mass on some vertex of strictly lower rank, with
    boundary vertices at rank 0, so the chain exits from everywhere.
    """
    k = np.where(rng.random((n, n)) < density, rng.random((n, n)), 0.0)
    rank = _ranks(n, boundary, rng)
    for x in range(n):
        lower = np.flatnonzero(rank < rank[x]) if rank[x] > 0 else np.flatnonzero(np.arange(n) != x)
        k[x, rng.choice(lower)] += rng.uniform(0.2, 1.0)
    if no_self_loops:
        np.fill_diagonal(k, 0.0)
    return TransitionKernel(k, normalize=True)


def random_family(n, rng, boundary, size, density=0.5):
    """Kernel family in which every stationary policy exits in finite expected time.

    All kernels share one ranking of the vertices and each interior row has
    mass on a lower-ranked vertex, so any mixture of rows keeps that property.
    """
    rank = _ranks(n, boundary, rng)
    kernels = []
    for _ in range(size):
        k = np.where(rng.random((n, n)) < density, rng.random((n, n)), 0.0)
        for x in range(n):
            lower = np.flatnonzero(rank < rank[x]) if rank[x] > 0 else np.flatnonzero(np.arange(n) != x)
            k[x, rng.choice(lower)] += rng.uniform(0.2, 1.0)
        np.fill_diagonal(k, 0.0)
        kernels.append(TransitionKernel(k, normalize=True))
    return KernelFamily(kernels)


def two_cycle_family(n=4):
    """Family on an ``n``-chain (``n >= 4``) whose controls allow the cycle ``x2 <-> x3``.

    Kernel 0 is the symmetric walk, kernel 1 moves ``x2 -> x3`` and
    ``x3 -> x2`` deterministically. With boundary ``{x1, xn}`` the control
    that uses kernel 1 at both vertices never exits.
    """
    walk = walk_kernel(n).matrix.copy()
    k = walk.copy()
    k[1] = 0.0
    k[1, 2] = 1.0
    k[2] = 0.0
    k[2, 1] = 1.0
    return KernelFamily([TransitionKernel(walk), TransitionKernel(k)])
