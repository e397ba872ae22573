"""Graphs, boundary sets, transition kernels and the path distance.

Functions on a graph are plain 1-d float arrays of length ``n``; the helpers
``as_function`` and ``as_boundary`` validate user input at API boundaries.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

KERNEL_ROW_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when input data violates a documented invariant."""


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


class Graph:
    """Finite weighted (di)graph.

    Parameters
    ----------
    weights : (n, n) array_like
        ``weights[x, y]`` is the weight of the edge from ``x`` to ``y``.
        Zero means "no edge". Must be finite, nonnegative, zero on the diagonal.
    labels : sequence of str, optional
        Display names, defaulting to ``"x1" ... "xn"``.
    """

    def __init__(self, weights, labels=None):
        w = np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError(f"weights must be a square matrix, got shape {w.shape}")
        n = w.shape[0]
        if n < 2:
            raise ValidationError("a graph needs at least 2 vertices")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise ValidationError(f"negative weight w({i},{j}) = {w[i, j]}")
        if np.any(np.diag(w) != 0):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise ValidationError(f"self-loop weight w({i},{i}) must be 0")
        if labels is None:
            labels = [f"x{i + 1}" for i in range(n)]
        labels = tuple(str(s) for s in labels)
        if len(labels) != n:
            raise ValidationError(f"expected {n} labels, got {len(labels)}")
        self._weights = _readonly(w)
        self.labels = labels

    @property
    def weights(self):
        return self._weights

    @property
    def n(self):
        return self._weights.shape[0]

    def __repr__(self):
        return f"Graph(n={self.n}, edges={int(np.count_nonzero(self._weights))})"

    @classmethod
    def from_edges(cls, n, edges, labels=None):
        """Build a graph from ``(source, target, weight)`` triples."""
        w = np.zeros((n, n))
        for k, edge in enumerate(edges):
            try:
                s, t, val = edge
                s, t = int(s), int(t)
            except (TypeError, ValueError):
                raise ValidationError(f"edge {k}: expected [source, target, weight], got {edge!r}")
            if not (0 <= s < n and 0 <= t < n):
                raise ValidationError(f"edge {k}: vertex index out of range 0..{n - 1}")
            w[s, t] = float(val)
        return cls(w, labels)

    def power(self, q):
        """Graph with every weight raised to the power ``q``."""
        return Graph(self._weights ** q, self.labels)


@dataclass(frozen=True)
class Boundary:
    """Nonempty proper subset of the vertices carrying Dirichlet data."""

    members: tuple
    n: int
    mask: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            members = sorted({int(i) for i in self.members})
        except (TypeError, ValueError):
            raise ValidationError(f"boundary must be a list of vertex indices, got {self.members!r}")
        if not members:
            raise ValidationError("boundary must be nonempty")
        if members[0] < 0 or members[-1] >= self.n:
            raise ValidationError(f"boundary index out of range 0..{self.n - 1}")
        if len(members) == self.n:
            raise ValidationError("Γ must be a proper subset of the vertices")
        mask = np.zeros(self.n, dtype=bool)
        mask[members] = True
        mask.setflags(write=False)
        object.__setattr__(self, "members", tuple(members))
        object.__setattr__(self, "mask", mask)

    @property
    def interior(self):
        return np.flatnonzero(~self.mask)

    def __contains__(self, x):
        return 0 <= x < self.n and bool(self.mask[x])

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def as_boundary(boundary, n):
    if isinstance(boundary, Boundary):
        if boundary.n != n:
            raise ValidationError(f"boundary built for n={boundary.n}, expected n={n}")
        return boundary
    return Boundary(tuple(boundary), n)


def as_function(values, n, name="u"):
    """Validate ``values`` as a graph function on ``n`` vertices; returns a float copy."""
    u = np.array(values, dtype=float)
    if u.ndim == 0:
        u = np.full(n, float(u))
    if u.shape != (n,):
        raise ValidationError(f"{name} must have length {n}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValidationError(f"{name} has non-finite entries")
    return u


def sup_norm(u):
    return float(np.max(np.abs(u))) if len(u) else 0.0


class TransitionKernel:
    """Row-stochastic matrix ``K(x, y)``: probability of jumping from x to y.

    Rows must sum to one within ``1e-12``. Pass ``normalize=True`` to rescale
    rows explicitly; nothing is rescaled silently. With ``no_self_loops=True``
    a nonzero diagonal entry is rejected.
    """

    def __init__(self, matrix, normalize=False, no_self_loops=False):
        k = np.array(matrix, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ValidationError(f"kernel must be a square matrix, got shape {k.shape}")
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValidationError("kernel entries must be finite and nonnegative")
        sums = k.sum(axis=1)
        if normalize:
            if np.any(sums <= 0):
                raise ValidationError(f"kernel row {int(np.argmin(sums))} has zero mass")
            k = k / sums[:, None]
            sums = k.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > KERNEL_ROW_TOL)
        if bad.size:
            i = int(bad[0])
            raise ValidationError(f"kernel row {i} sums to {sums[i]!r}, not 1 (tolerance 1e-12)")
        if no_self_loops and np.any(np.diag(k) != 0):
            i = int(np.flatnonzero(np.diag(k))[0])
            raise ValidationError(f"kernel has self-loop mass K({i},{i}) = {k[i, i]}")
        self._matrix = _readonly(k)
        cdf = np.cumsum(k, axis=1)
        cdf.setflags(write=False)
        self._cdf = cdf
        # inverse-CDF draws that fall past a row's rounded total go to its last atom
        last = np.array([np.flatnonzero(row > 0)[-1] for row in k])
        last.setflags(write=False)
        self._last_atom = last

    @property
    def matrix(self):
        return self._matrix

    @property
    def cdf(self):
        return self._cdf

    @property
    def last_atom(self):
        return self._last_atom

    @property
    def n(self):
        return self._matrix.shape[0]

    def has_self_loops(self, vertices=None):
        d = np.diag(self._matrix)
        if vertices is not None:
            d = d[np.asarray(vertices, dtype=int)]
        return bool(np.any(d != 0))

    def __repr__(self):
        return f"TransitionKernel(n={self.n})"


def as_kernel(kernel):
    return kernel if isinstance(kernel, TransitionKernel) else TransitionKernel(kernel)


class KernelFamily:
    """Nonempty ordered collection of transition kernels on the same vertex set.

    The index set of admissible controls is ``range(len(family))``.
    """

    def __init__(self, kernels, normalize=False):
        kernels = [k if isinstance(k, TransitionKernel) else TransitionKernel(k, normalize=normalize)
                   for k in kernels]
        if not kernels:
            raise ValidationError("a kernel family needs at least one kernel")
        n = kernels[0].n
        for i, k in enumerate(kernels):
            if k.n != n:
                raise ValidationError(f"kernel {i} has n={k.n}, expected {n}")
        self.kernels = tuple(kernels)
        stack = np.stack([k.matrix for k in kernels])
        stack.setflags(write=False)
        self._stack = stack

    @property
    def matrices(self):
        """Array of shape ``(m, n, n)``."""
        return self._stack

    @property
    def n(self):
        return self.kernels[0].n

    def __len__(self):
        return len(self.kernels)

    def __getitem__(self, i):
        return self.kernels[i]

    def __iter__(self):
        return iter(self.kernels)

    def has_self_loops(self, vertices=None):
        return any(k.has_self_loops(vertices) for k in self.kernels)

    def __repr__(self):
        return f"KernelFamily(n={self.n}, size={len(self)})"


def as_family(family):
    if isinstance(family, KernelFamily):
        return family
    if isinstance(family, TransitionKernel):
        return KernelFamily([family])
    return KernelFamily(family)


def as_policy(policy, family):
    """Validate a control ``alpha: G -> A`` given as a sequence of kernel indices."""
    a = np.asarray(policy)
    if a.shape != (family.n,) or not np.issubdtype(a.dtype, np.integer):
        try:
            a = np.array([int(v) for v in policy])
        except (TypeError, ValueError):
            raise ValidationError("policy must be a sequence of kernel indices")
        if a.shape != (family.n,):
            raise ValidationError(f"policy must have length {family.n}")
    bad = np.flatnonzero((a < 0) | (a >= len(family)))
    if bad.size:
        raise ValidationError(f"policy index {a[bad[0]]} at vertex {bad[0]} is not in 0..{len(family) - 1}")
    return a.astype(int)


def policy_kernel(family, policy):
    """The composed kernel ``K^alpha(x, .) = K^{alpha(x)}(x, .)``."""
    family = as_family(family)
    a = as_policy(policy, family)
    rows = family.matrices[a, np.arange(family.n)]
    return TransitionKernel(rows)


def discrete_gradient(u, x):
    """Vector of differences ``u(x) - u(x_j)``; its entry at ``x`` is 0."""
    u = np.asarray(u, dtype=float)
    if not 0 <= x < u.shape[0]:
        raise ValidationError(f"vertex {x} out of range")
    g = u[x] - u
    g[x] = 0.0
    return g


def bump(x0, n):
    """Indicator function of the single vertex ``x0``."""
    if not 0 <= x0 < n:
        raise ValidationError(f"vertex {x0} out of range 0..{n - 1}")
    b = np.zeros(n)
    b[x0] = 1.0
    return b


def step_costs(weights, q=1.0):
    """``(w**q)**-1`` with the convention ``0**-1 = inf``."""
    w = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        wq = w ** q if q != 1.0 else w
        return np.where(wq > 0, 1.0 / np.where(wq > 0, wq, 1.0), np.inf)


def label_setting(costs, seeds):
    """Multi-source label-setting shortest path.

    ``costs[y, x]`` is the (possibly infinite) cost of relaxing ``x`` from an
    already settled ``y``: ``d(x) = min_y d(y) + costs[y, x]``. ``seeds`` maps
    vertex -> fixed initial value. Costs must be positive.
    """
    n = costs.shape[0]
    d = np.full(n, np.inf)
    fixed = np.zeros(n, dtype=bool)
    heap = []
    for v, val in seeds.items():
        d[v] = val
        fixed[v] = True
        heapq.heappush(heap, (val, v))
    done = np.zeros(n, dtype=bool)
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v] or dv > d[v]:
            continue
        done[v] = True
        for x in np.flatnonzero(np.isfinite(costs[v])):
            if fixed[x] or done[x]:
                continue
            cand = dv + costs[v, x]
            if cand < d[x]:
                d[x] = cand
                heapq.heappush(heap, (cand, int(x)))
    return d


def path_distance(graph, boundary, weight_exponent=1.0, orientation="inbound"):
    """Path distance to the boundary set.

    The cost of a step is the reciprocal of the edge weight raised to
    ``weight_exponent``; zero-weight edges cost ``+inf``.

    Parameters
    ----------
    graph : Graph
    boundary : Boundary or sequence of int
    weight_exponent : float
        Exponent ``q > 0`` applied to weights (1 for ``d_G``, ``1/p`` for
        the p-eikonal distance).
    orientation : {"inbound", "outbound"}
        ``"inbound"`` (default) steps from ``y`` to ``y'`` at cost
        ``w(y', y)**-q``, so that ``d(y) = min_y' [w(y', y)**-q + d(y')]``.
        This is the orientation in which ``max_y w(y, x)(d(x) - d(y)) = 1``
        holds off the boundary. ``"outbound"`` uses ``w(y, y')**-q``.
        Both coincide on symmetric graphs.

    Returns
    -------
    d : ndarray
        Distances; ``0`` on the boundary and ``inf`` where no path exists.
    """
    if not weight_exponent > 0:
        raise ValidationError(f"weight exponent must be positive, got {weight_exponent}")
    boundary = as_boundary(boundary, graph.n)
    costs = step_costs(graph.weights, weight_exponent)
    if orientation == "outbound":
        costs = costs.T
    elif orientation != "inbound":
        raise ValidationError(f"unknown orientation {orientation!r}")
    return label_setting(costs, {b: 0.0 for b in boundary})
