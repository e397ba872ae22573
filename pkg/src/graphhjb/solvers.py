"""Deterministic solvers for ``I(u, .) = f`` off the boundary, ``u = g`` on it.

Each solver returns a :class:`SolveReport`. Conventions per solver:

* ``solve_linear_exit`` and the Bellman solvers solve ``L(u) = -f`` (resp.
  ``inf_i L_i(u) = -f``), i.e. ``u`` is an expected running cost plus exit
  value.
* ``solve_eikonal`` / ``solve_peikonal`` solve the h-form ``H(u) = f`` or the
  i-form ``I(u) = f``; the i-form is reduced to the h-form via ``u -> -u``,
  ``g -> -g``.
* ``perron_gauss_seidel`` solves ``I(u) = f`` for any operator with the
  comparison property, starting from a subsolution ``I(start) >= f``.
"""

import itertools
import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .graph import (
    ValidationError,
    as_boundary,
    as_family,
    as_function,
    as_kernel,
    as_policy,
    label_setting,
    path_distance,
    policy_kernel,
    step_costs,
    sup_norm,
)
from .operators import BellmanInf, Eikonal, Extremal, LinearGenerator, PEikonal, _check_form, _check_p

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**6
PIVOT_TOL = 1e-12

CONVERGED = "converged"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible"
SINGULAR = "singular"


def _format_float(x):
    if np.isfinite(x):
        return repr(float(x))
    return "inf" if x > 0 else "-inf"


def _json_float(x):
    return float(x) if np.isfinite(x) else _format_float(x)


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    residual: float
    status: str
    policy: np.ndarray = None
    message: str = ""

    @property
    def converged(self):
        return self.status == CONVERGED

    def to_dict(self):
        d = {
            "status": self.status,
            "iterations": int(self.iterations),
            "residual": _json_float(self.residual),
            "solution": [_json_float(v) for v in self.solution],
        }
        if self.policy is not None:
            d["policy"] = [int(a) for a in self.policy]
        if self.message:
            d["message"] = self.message
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def to_csv(self):
        return "".join(f"{i},{_format_float(v)}\n" for i, v in enumerate(self.solution))


@dataclass
class ExitCertificate:
    """Solution ``phi`` of ``M^-(phi) = 1``, ``phi = 0`` on the boundary.

    ``-phi(x)`` is the worst expected exit time over controls and
    ``2 * ||phi||`` bounds ``E_x tau`` uniformly over controls and starts.
    """

    phi: np.ndarray
    status: str
    iterations: int = 0
    trapped: tuple = ()
    worst_expected_exit: np.ndarray = field(init=False)
    bound: float = field(init=False)

    def __post_init__(self):
        self.worst_expected_exit = -self.phi
        self.bound = 2.0 * sup_norm(self.phi) if self.status == CONVERGED else np.inf

    @property
    def feasible(self):
        return self.status == CONVERGED

    def to_dict(self):
        d = {
            "status": self.status,
            "iterations": int(self.iterations),
            "phi": [_json_float(v) for v in self.phi],
            "worst_expected_exit": [_json_float(v) for v in self.worst_expected_exit],
            "bound": _json_float(self.bound),
        }
        if self.trapped:
            d["trapped"] = [int(v) for v in self.trapped]
        return d


def _setup(n, f, g, boundary):
    boundary = as_boundary(boundary, n)
    f = as_function(f, n, "f")
    g = as_function(g, n, "g")
    return f, g, boundary


def _bisect(r, lo, hi, xtol):
    """Shrink ``[lo, hi]`` with ``r(lo) >= 0 > r(hi)`` until ``hi - lo <= xtol``.

    ``xtol=0`` runs until the bracket can no longer be split in floating point.
    Returns ``lo``, the side on which ``r`` is nonnegative.
    """
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if r(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


# --- linear and Bellman -----------------------------------------------------

def _interior_system(matrix, f, g, boundary):
    inner = boundary.interior
    outer = np.asarray(boundary.members)
    a = np.eye(len(inner)) - matrix[np.ix_(inner, inner)]
    b = f[inner] + matrix[np.ix_(inner, outer)] @ g[outer]
    return a, b, inner


def _linear_residual(matrix, u, f, inner):
    lu = matrix[inner] @ u - u[inner]
    return sup_norm(lu + f[inner])


def solve_linear_exit(kernel, f, g, boundary):
    """Solve ``L(u, x) = -f(x)`` off the boundary with ``u = g`` on it.

    The interior system ``u(x) - sum_{y interior} K(x, y) u(y) =
    f(x) + sum_{y in boundary} K(x, y) g(y)`` is eliminated directly. A pivot
    below ``1e-12`` means the chain can avoid the boundary forever from some
    vertex, and the report's status is ``"singular"``.
    """
    kernel = as_kernel(kernel)
    f, g, boundary = _setup(kernel.n, f, g, boundary)
    k = kernel.matrix
    a, b, inner = _interior_system(k, f, g, boundary)
    u = g.copy()
    with warnings.catch_warnings():
        # singularity is reported through the status instead
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivot = np.min(np.abs(np.diag(lu)))
    if not pivot >= PIVOT_TOL:
        u[inner] = np.nan
        return SolveReport(u, 1, np.inf, SINGULAR,
                           message=f"interior system singular (pivot {pivot:.3g}); exit time is not finite")
    u[inner] = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    return SolveReport(u, 1, _linear_residual(k, u, f, inner), CONVERGED)


def _check_bellman_family(family, boundary):
    if family.has_self_loops(boundary.interior):
        raise ValidationError("Bellman solvers require K(x, x) = 0 at interior vertices")


def value_iteration_bellman(family, f, g, boundary, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Value iteration ``u(x) <- f(x) + min_i sum_y K^i(x, y) u(y)`` off the boundary.

    Starts from ``g`` on the boundary and ``0`` inside. Stops when the sup-norm
    step is below ``tol`` and the Bellman residual is below ``10 * tol``.
    Iterates with sup-norm above ``1 / tol`` are reported as ``"infeasible"``.
    """
    family = as_family(family)
    f, g, boundary = _setup(family.n, f, g, boundary)
    _check_bellman_family(family, boundary)
    if not tol > 0:
        raise ValidationError("tol must be positive")
    inner = boundary.interior
    rows = family.matrices[:, inner, :]
    u = np.where(boundary.mask, g, 0.0)
    fi = f[inner]
    residual = np.inf
    for it in range(1, max_iter + 1):
        new = fi + (rows @ u).min(axis=0)
        step = sup_norm(new - u[inner])
        u[inner] = new
        if sup_norm(u) > 1.0 / tol:
            return SolveReport(u, it, np.inf, INFEASIBLE,
                               message="iterates diverge; the finite exit time assumption fails")
        if step < tol:
            residual = sup_norm(fi + (rows @ u).min(axis=0) - u[inner])
            if residual < 10 * tol:
                return SolveReport(u, it, residual, CONVERGED, policy=BellmanInf(family).argmin(u))
    residual = sup_norm(fi + (rows @ u).min(axis=0) - u[inner])
    return SolveReport(u, max_iter, residual, MAX_ITER)


def policy_iteration_bellman(family, f, g, boundary, tol=DEFAULT_TOL, max_iter=1000, policy=None):
    """Howard policy iteration for the same problem as :func:`value_iteration_bellman`.

    Alternates exact policy evaluation (a linear exit solve with the composed
    kernel) and greedy improvement with ties going to the lowest kernel index.
    The default starting policy is :func:`proper_policy`. The returned report
    carries the final policy.
    """
    family = as_family(family)
    f, g, boundary = _setup(family.n, f, g, boundary)
    _check_bellman_family(family, boundary)
    op = BellmanInf(family)
    inner = boundary.interior
    if policy is None:
        alpha = proper_policy(family, boundary)
        if alpha is None:
            return SolveReport(np.full(family.n, np.nan), 0, np.inf, INFEASIBLE,
                               message="no control reaches the boundary from every vertex")
    else:
        alpha = as_policy(policy, family)
    for it in range(1, max_iter + 1):
        rep = solve_linear_exit(policy_kernel(family, alpha), f, g, boundary)
        if rep.status != CONVERGED:
            return SolveReport(rep.solution, it, np.inf, INFEASIBLE, policy=alpha,
                               message=f"policy evaluation is singular for policy {alpha.tolist()}")
        u = rep.solution
        best = op.argmin(u)
        new = alpha.copy()
        new[inner] = best[inner]
        if np.array_equal(new, alpha):
            residual = sup_norm(op.apply(u)[inner] + f[inner])
            status = CONVERGED if residual <= max(tol, 10 * tol * (1 + sup_norm(u))) else MAX_ITER
            return SolveReport(u, it, residual, status, policy=alpha)
        alpha = new
    return SolveReport(u, max_iter, sup_norm(op.apply(u)[inner] + f[inner]), MAX_ITER, policy=alpha)


def enumerate_policies(family, f, g, boundary):
    """Pointwise minimum of the exit cost over every stationary policy.

    Exponential in the number of interior vertices; meant as an oracle for
    small instances. Policies that never exit from some vertex are skipped
    when ``f > 0`` inside (their cost is ``+inf`` there); otherwise their cost
    is undefined and ``ValidationError`` is raised. Returns
    ``(value, policies_evaluated)``.
    """
    family = as_family(family)
    f, g, boundary = _setup(family.n, f, g, boundary)
    inner = boundary.interior
    best = np.full(family.n, np.inf)
    count = 0
    alpha = np.zeros(family.n, dtype=int)
    for choice in itertools.product(range(len(family)), repeat=len(inner)):
        alpha[inner] = choice
        rep = solve_linear_exit(policy_kernel(family, alpha), f, g, boundary)
        if rep.status != CONVERGED:
            if np.all(f[inner] > 0):
                continue
            raise ValidationError(f"policy {alpha.tolist()} has no finite exit time")
        best = np.minimum(best, rep.solution)
        count += 1
    return best, count


def trapping_set(family, boundary):
    """Interior vertices from which some control keeps the chain off the boundary forever.

    Greatest set ``S`` of interior vertices such that every ``x`` in ``S`` has
    a kernel whose row is supported in ``S``. Empty exactly when every control
    has a finite expected exit time.
    """
    family = as_family(family)
    boundary = as_boundary(boundary, family.n)
    inside = ~boundary.mask
    support = family.matrices > 0
    while True:
        escapes = np.any(support & ~inside[None, None, :], axis=2)  # [i, x]
        keep = inside & np.any(~escapes, axis=0)
        if np.array_equal(keep, inside):
            return np.flatnonzero(inside)
        inside = keep


def proper_policy(family, boundary):
    """A stationary control that reaches the boundary from everywhere, or ``None``.

    Vertices are peeled off in layers: ``x`` joins once some kernel gives
    positive mass to the boundary or to earlier layers, and that kernel is its
    control. Used to start policy iteration from a feasible policy.
    """
    family = as_family(family)
    boundary = as_boundary(boundary, family.n)
    reached = boundary.mask.copy()
    alpha = np.zeros(family.n, dtype=int)
    support = family.matrices > 0
    while not reached.all():
        hits = np.any(support & reached[None, None, :], axis=2) & ~reached[None, :]  # [i, x]
        new = np.any(hits, axis=0)
        if not new.any():
            return None
        alpha[new] = np.argmax(hits[:, new], axis=0)
        reached |= new
    return alpha


def certify_exit_time(family, boundary, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Solve ``M^-(phi) = 1`` off the boundary, ``phi = 0`` on it.

    A nonempty trapping set means some control never exits, so no solution
    exists and the certificate is ``"infeasible"``; otherwise ``phi`` comes
    from value iteration with running cost ``-1``.
    """
    family = as_family(family)
    boundary = as_boundary(boundary, family.n)
    _check_bellman_family(family, boundary)
    n = family.n
    trapped = trapping_set(family, boundary)
    if trapped.size:
        logger.info("controls can avoid the boundary forever from %s", trapped.tolist())
        phi = np.where(boundary.mask, 0.0, -np.inf)
        return ExitCertificate(phi, INFEASIBLE, 0, tuple(trapped.tolist()))
    rep = value_iteration_bellman(family, -np.ones(n), np.zeros(n), boundary, tol, max_iter)
    return ExitCertificate(rep.solution, rep.status, rep.iterations)


# --- eikonal ----------------------------------------------------------------

def _check_positive_f(f, boundary):
    inner = boundary.interior
    bad = inner[f[inner] <= 0]
    if bad.size:
        raise ValidationError(f"f must be positive off the boundary; f({bad[0]}) = {f[bad[0]]}")


def _reachability_failure(u, boundary, status_if_ok=CONVERGED):
    unreachable = boundary.interior[~np.isfinite(u[boundary.interior])]
    if unreachable.size:
        return INFEASIBLE, f"no path from the boundary reaches vertices {unreachable.tolist()}"
    return status_if_ok, ""


def solve_eikonal(graph, f, g, boundary, form="h"):
    """Label-setting solve of ``H_e(u) = f`` (or ``I_e(u) = f``), ``u = g`` on the boundary.

    Vertices are settled in nondecreasing order of
    ``u(x) = min_y [u(y) + f(x) / w(y, x)]``, which needs ``f > 0``.
    """
    form = _check_form(form)
    f, g, boundary = _setup(graph.n, f, g, boundary)
    _check_positive_f(f, boundary)
    if form == "i":
        rep = solve_eikonal(graph, f, -g, boundary, "h")
        rep.solution = -rep.solution
        return rep
    costs = step_costs(graph.weights) * np.where(boundary.mask, 1.0, f)[None, :]
    u = label_setting(costs, {b: g[b] for b in boundary})
    status, msg = _reachability_failure(u, boundary)
    residual = np.inf
    if status == CONVERGED:
        op = Eikonal(graph, "h")
        residual = sup_norm(op.apply(u)[boundary.interior] - f[boundary.interior])
    return SolveReport(u, 1, residual, status, message=msg)


def _peikonal_local_solve(w, uy, fx, p):
    """Solve ``sum_y (1/p) w_y ((t - u_y)_+)^p = fx`` for ``t`` (``w > 0``)."""
    if p == 1.0:
        # piecewise linear: add neighbours in increasing order of u_y
        order = np.argsort(uy, kind="stable")
        uy, w = uy[order], w[order]
        sw = swu = 0.0
        for k in range(len(uy)):
            sw += w[k]
            swu += w[k] * uy[k]
            t = (fx + swu) / sw
            if k + 1 == len(uy) or t <= uy[k + 1]:
                return t
    lo = float(uy.min())

    def r(t):
        return fx - np.sum(w * np.maximum(t - uy, 0.0) ** p) / p

    step = 1.0
    hi = lo + step
    while r(hi) >= 0:
        step *= 2.0
        hi = lo + step
        if not np.isfinite(hi):
            raise RuntimeError("p-eikonal local solve failed to bracket the root")
    return _bisect(r, lo, hi, 0.0)


def solve_peikonal(graph, p, f, g, boundary, form="h", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Gauss-Seidel solve of ``H_p(u) = f`` (or ``I_p(u) = f``), ``u = g`` on the boundary.

    Starts from the subsolution ``g`` on the boundary and ``min g`` inside, so
    the iterates are pointwise nondecreasing. Each sweep visits interior
    vertices in increasing order of their current value and solves the scalar
    equation at each one exactly (piecewise linear for ``p = 1``, bisection to
    full precision otherwise). Stops when the sweep change is below ``tol`` and
    the residual is at most ``tol``.
    """
    p = _check_p(p)
    form = _check_form(form)
    f, g, boundary = _setup(graph.n, f, g, boundary)
    _check_positive_f(f, boundary)
    if form == "i":
        rep = solve_peikonal(graph, p, f, -g, boundary, "h", tol, max_iter)
        rep.solution = -rep.solution
        return rep
    w = graph.weights
    inner = boundary.interior
    dead = [x for x in inner if not np.any(w[:, x] > 0)]
    if dead:
        return SolveReport(g.copy(), 0, np.inf, INFEASIBLE,
                           message=f"vertices {dead} have no in-neighbour with positive weight")
    d = path_distance(graph, boundary)
    status, msg = _reachability_failure(d, boundary)
    if status != CONVERGED:
        return SolveReport(d, 0, np.inf, status, message=msg)
    nbrs = {x: np.flatnonzero(w[:, x] > 0) for x in inner}
    wcol = {x: w[nbrs[x], x] for x in inner}
    op = PEikonal(graph, p, "h")
    u = np.where(boundary.mask, g, g[list(boundary)].min())
    residual = np.inf
    for it in range(1, max_iter + 1):
        change = 0.0
        for x in inner[np.argsort(u[inner], kind="stable")]:
            t = _peikonal_local_solve(wcol[x], u[nbrs[x]], f[x], p)
            change = max(change, abs(t - u[x]))
            u[x] = t
        if change < tol:
            residual = sup_norm(op.apply(u)[inner] - f[inner])
            if residual <= tol:
                return SolveReport(u, it, residual, CONVERGED)
    residual = sup_norm(op.apply(u)[inner] - f[inner])
    return SolveReport(u, max_iter, residual, MAX_ITER)


# --- generic Perron iteration -----------------------------------------------

def _slack(*arrays):
    return 1e-12 * (1.0 + max(sup_norm(a) for a in arrays))


def check_subsolution(operator, u, f, boundary, g=None):
    """Raise ``ValidationError`` unless ``I(u) >= f`` inside (and ``u <= g`` on the boundary)."""
    slack = _slack(u, f)
    vals = operator.apply(u)
    for x in boundary.interior:
        if vals[x] < f[x] - slack:
            raise ValidationError(f"not a subsolution at vertex {x}: I(u, x) = {float(vals[x])!r} < f(x) = {float(f[x])!r}")
    if g is not None:
        for x in boundary:
            if u[x] > g[x] + slack:
                raise ValidationError(f"not a subsolution at boundary vertex {x}: u = {float(u[x])!r} > g = {float(g[x])!r}")


def perron_gauss_seidel(operator, f, g, boundary, start, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                        history=None):
    """Monotone Gauss-Seidel realisation of Perron's method for ``I(u) = f``.

    ``start`` must be a subsolution (``I(start) >= f`` inside, ``start <= g`` on
    the boundary). After setting ``u = g`` on the boundary, each interior value
    is replaced by the largest root of ``t -> I(u with u(x) = t, x) - f(x)``,
    found by expanding ``[u(x), u(x) + 1]`` geometrically and bisecting to
    ``tol / 10``; the lower end is kept so ``u`` stays a subsolution and every
    sweep is pointwise nondecreasing. The residual is required to be
    nonincreasing in ``t``; a violation raises ``ValidationError``.

    If ``history`` is a list, a copy of the iterate after each sweep is
    appended to it.
    """
    n = operator.n
    f, g, boundary = _setup(n, f, g, boundary)
    u = as_function(start, n, "start")
    check_subsolution(operator, u, f, boundary, g)
    u[boundary.mask] = g[boundary.mask]
    inner = boundary.interior
    xtol = tol / 10.0
    slack = _slack(u, f)

    for it in range(1, max_iter + 1):
        change = 0.0
        for x in inner:
            base = u[x]

            def r(t, x=x):
                u[x] = t
                return operator(u, x) - f[x]

            r0 = r(base)
            step = 1.0
            hi = base + step
            rh = r(hi)
            while rh >= 0:
                if rh > r0 + slack:
                    u[x] = base
                    raise ValidationError(f"residual at vertex {x} increases in u(x); operator lacks the comparison property")
                step *= 2.0
                if step > 1.0 / tol:
                    u[x] = base
                    return SolveReport(u, it, np.inf, INFEASIBLE,
                                       message=f"no root of the residual found at vertex {x}")
                hi = base + step
                rh = r(hi)
            t = _bisect(r, base, hi, xtol)
            u[x] = t
            change = max(change, t - base)
        if history is not None:
            history.append(u.copy())
        if change < tol:
            residual = sup_norm(operator.apply(u)[inner] - f[inner])
            return SolveReport(u, it, residual, CONVERGED)
    residual = sup_norm(operator.apply(u)[inner] - f[inner])
    return SolveReport(u, max_iter, residual, MAX_ITER)


def default_subsolution(operator, f, g, boundary, tol=DEFAULT_TOL):
    """A subsolution for ``I(u) = f`` built from a barrier, for the built-in operators.

    * i-form eikonal: ``-(max f) d + min g`` with ``d`` the path distance;
    * i-form p-eikonal: ``-(p max f)^(1/p) d_p + min g`` with ``d_p`` the
      path distance for weights ``w^(1/p)``;
    * linear, Bellman, extremal-minus: ``c phi + min g`` with ``phi`` the exit
      certificate (``M^-(phi) = 1``) and ``c = max f``, or the constant
      ``min g`` when ``f <= 0`` inside (no exit-time assumption needed).
    """
    n = operator.n
    f, g, boundary = _setup(n, f, g, boundary)
    inner = boundary.interior
    # small margin so the barrier is a strict subsolution despite rounding
    fmax = max(float(f[inner].max()), 0.0) * (1 + 1e-8) + 1e-12
    gmin = float(g[list(boundary)].min())
    if isinstance(operator, Eikonal) and operator.form == "i":
        return -fmax * path_distance(operator.graph, boundary) + gmin
    if isinstance(operator, PEikonal) and operator.form == "i":
        p = operator.p
        d = path_distance(operator.graph, boundary, 1.0 / p)
        return -(p * fmax) ** (1.0 / p) * d + gmin
    linear_like = isinstance(operator, (LinearGenerator, BellmanInf)) or (
        isinstance(operator, Extremal) and operator.side == "minus")
    if linear_like and f[inner].max() <= 0:
        # constants are annihilated, so I(gmin) = 0 >= f
        return np.full(n, gmin)
    if isinstance(operator, LinearGenerator):
        rep = solve_linear_exit(operator.kernel, -np.ones(n), np.zeros(n), boundary)
        if rep.status != CONVERGED:
            raise ValidationError("kernel has no finite exit time; no barrier subsolution exists")
        phi = rep.solution
    elif isinstance(operator, BellmanInf) or (isinstance(operator, Extremal) and operator.side == "minus"):
        cert = certify_exit_time(operator.family, boundary, tol=min(tol, 1e-12))
        if not cert.feasible:
            raise ValidationError("kernel family has no finite exit time; no barrier subsolution exists")
        phi = cert.phi
    else:
        raise ValidationError(f"no built-in subsolution for {operator!r}; pass a start function")
    return fmax * phi + gmin
