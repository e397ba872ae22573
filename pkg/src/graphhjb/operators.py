"""Operators ``I(u, x)`` acting on functions of a finite graph.

Every operator is callable as ``op(u, x)`` for a single vertex and
``op.apply(u)`` for all vertices at once. The ``eval_*`` functions are the
underlying formulas and can be used directly.

Sign conventions: the "i" forms (and the generators, Bellman and Pucci
operators) have the global comparison property: if ``u <= v`` with equality at
``x`` then ``I(u, x) <= I(v, x)``. The "h" forms of the eikonal operators use the
opposite convention and are related by ``I(u, x) = H(-u, x)``.
"""

import numpy as np

from .graph import (
    ValidationError,
    as_family,
    as_kernel,
    discrete_gradient,
)

FORMS = ("h", "i")


def _check_form(form):
    form = str(form).lower()
    if form not in FORMS:
        raise ValidationError(f"form must be 'h' or 'i', got {form!r}")
    return form


def _check_p(p):
    if not p >= 1:
        raise ValidationError(f"p-eikonal exponent must satisfy p >= 1, got {p}")
    return float(p)


def _check_bounds(lam, Lam):
    if not (lam > 0 and Lam >= lam):
        raise ValidationError(f"ellipticity bounds need 0 < lambda <= Lambda, got ({lam}, {Lam})")
    return float(lam), float(Lam)


def _pos(t):
    return np.maximum(t, 0.0)


def _neg(t):
    return np.minimum(t, 0.0)


# --- pointwise formulas -----------------------------------------------------

def eval_linear(kernel, u, x):
    """Generator ``sum_y K(x, y)(u(y) - u(x))``."""
    k = kernel.matrix if hasattr(kernel, "matrix") else np.asarray(kernel)
    return float(k[x] @ (u - u[x]))


def eval_bellman_inf(family, u, x):
    """``min_i sum_y K^i(x, y)(u(y) - u(x))`` over the family's kernels."""
    vals = family.matrices[:, x, :] @ (u - u[x])
    return float(vals.min())


def eval_extremal(family, u, x, side="minus"):
    vals = family.matrices[:, x, :] @ (u - u[x])
    if side == "minus":
        return float(vals.min())
    if side == "plus":
        return float(vals.max())
    raise ValidationError(f"side must be 'minus' or 'plus', got {side!r}")


def eval_eikonal(graph, u, x, form="h"):
    """``H_e(u, x) = max_y w(y, x)(u(x) - u(y))``; the i-form is ``H_e(-u, x)``."""
    w = graph.weights[:, x]
    if _check_form(form) == "h":
        return float(np.max(w * (u[x] - u)))
    return float(np.max(w * (u - u[x])))


def eval_peikonal(graph, p, u, x, form="h"):
    """``H_p(u, x) = sum_y (1/p) w(y, x) ((u(x) - u(y))_+)^p``; the i-form is ``H_p(-u, x)``."""
    p = _check_p(p)
    w = graph.weights[:, x]
    diff = u[x] - u if _check_form(form) == "h" else u - u[x]
    return float(np.sum(w * _pos(diff) ** p) / p)


def eval_J(profile, graph, u, x):
    """``J(u, x) = sum_y w(y, x) c(u(y) - u(x))``."""
    return float(graph.weights[:, x] @ profile(u - u[x]))


def eval_pucci_J_minus(graph, lam, Lam, u, x):
    """Minimal operator ``sum_y w(y, x) [lam (d)_+ + Lam (d)_-]`` with ``d = u(y) - u(x)``.

    ``(t)_- = min(t, 0)``, so each term is ``min_{lam <= a <= Lam} a t``.
    """
    lam, Lam = _check_bounds(lam, Lam)
    d = u - u[x]
    return float(graph.weights[:, x] @ (lam * _pos(d) + Lam * _neg(d)))


# --- operator objects -------------------------------------------------------

class Operator:
    """Base class: subclasses implement ``_eval(u, x)`` and set ``n``."""

    n = None
    kind = "operator"

    def __call__(self, u, x):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n,):
            raise ValidationError(f"function must have length {self.n}, got shape {u.shape}")
        if not 0 <= x < self.n:
            raise ValidationError(f"vertex {x} out of range 0..{self.n - 1}")
        return self._eval(u, int(x))

    def apply(self, u):
        """Values ``I(u, x)`` at every vertex."""
        u = np.asarray(u, dtype=float)
        return np.array([self(u, x) for x in range(self.n)])

    def _eval(self, u, x):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class LinearOperator(Operator):
    """``I(u, x) = sum_y a(x, y)(u(y) - u(x))`` for an arbitrary coefficient matrix.

    Has the comparison property exactly when the off-diagonal coefficients are
    nonnegative; negative coefficients are accepted so that counterexamples
    can be built.
    """

    kind = "linear-coefficients"

    def __init__(self, coefficients):
        a = np.array(coefficients, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("coefficients must be a square matrix")
        a.setflags(write=False)
        self.coefficients = a
        self.n = a.shape[0]

    def _eval(self, u, x):
        return float(self.coefficients[x] @ (u - u[x]))

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        a = self.coefficients
        return a @ u - a.sum(axis=1) * u


class LinearGenerator(LinearOperator):
    """Generator ``L`` of the Markov chain with kernel ``K``."""

    kind = "linear"

    def __init__(self, kernel):
        self.kernel = as_kernel(kernel)
        super().__init__(self.kernel.matrix)

    def _eval(self, u, x):
        return eval_linear(self.kernel, u, x)


class BellmanInf(Operator):
    """Bellman operator: infimum of the generators of a kernel family.

    The infimum over controls reduces to a minimum over kernel indices at each
    vertex because ``K^alpha(x, .)`` only depends on ``alpha(x)``.
    """

    kind = "bellman"

    def __init__(self, family):
        self.family = as_family(family)
        self.n = self.family.n

    def _eval(self, u, x):
        return eval_bellman_inf(self.family, u, x)

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        return self.all_controls(u).min(axis=0)

    def all_controls(self, u):
        """Array ``[i, x] -> L_{K^i}(u, x)``."""
        m = self.family.matrices
        return m @ u - u[None, :]

    def argmin(self, u, rtol=1e-12):
        """Minimizing kernel index per vertex; near-ties go to the lowest index."""
        vals = self.all_controls(np.asarray(u, dtype=float))
        best = vals.min(axis=0)
        scale = rtol * (1.0 + np.abs(vals).max(axis=0))
        return np.argmax(vals <= best + scale, axis=0)


class Extremal(Operator):
    """Extremal operators ``M^-`` (inf) and ``M^+`` (sup) over a kernel family."""

    def __init__(self, family, side="minus"):
        if side not in ("minus", "plus"):
            raise ValidationError(f"side must be 'minus' or 'plus', got {side!r}")
        self.family = as_family(family)
        self.side = side
        self.kind = f"extremal-{side}"
        self.n = self.family.n

    def _eval(self, u, x):
        return eval_extremal(self.family, u, x, self.side)

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        vals = self.family.matrices @ u - u[None, :]
        return vals.min(axis=0) if self.side == "minus" else vals.max(axis=0)


class Eikonal(Operator):
    """Graph eikonal operator in h-form ``H_e`` or i-form ``I_e``."""

    kind = "eikonal"

    def __init__(self, graph, form="i"):
        self.graph = graph
        self.form = _check_form(form)
        self.n = graph.n

    def _eval(self, u, x):
        return eval_eikonal(self.graph, u, x, self.form)

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        w = self.graph.weights
        diff = u[None, :] - u[:, None]  # [y, x] -> u(x) - u(y)
        if self.form == "i":
            diff = -diff
        return np.max(w * diff, axis=0)


class PEikonal(Operator):
    """Graph p-eikonal operator (``p >= 1``) in h-form ``H_p`` or i-form ``I_p``."""

    kind = "peikonal"

    def __init__(self, graph, p, form="i"):
        self.graph = graph
        self.p = _check_p(p)
        self.form = _check_form(form)
        self.n = graph.n

    def _eval(self, u, x):
        return eval_peikonal(self.graph, self.p, u, x, self.form)

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        diff = u[None, :] - u[:, None]
        if self.form == "i":
            diff = -diff
        return np.sum(self.graph.weights * _pos(diff) ** self.p, axis=0) / self.p

    def gradient(self, v, x):
        """Gradient of ``u -> I_p(u, x)`` at ``v`` (i-form, ``p > 1``).

        Entry ``k != x`` is ``w(k, x)((v_k - v_x)_+)^(p-1)``; entry ``x`` is minus
        their sum, so the entries always add up to zero.
        """
        if self.form != "i":
            raise ValidationError("gradient is provided for the i-form operator")
        v = np.asarray(v, dtype=float)
        g = self.graph.weights[:, x] * _pos(v - v[x]) ** (self.p - 1.0)
        g[x] = 0.0
        g[x] = -g.sum()
        return g


class MonotoneProfile:
    """Nondecreasing scalar profile ``c`` used by the operator ``J``.

    ``c`` must accept numpy arrays. Monotonicity (and, when ``bounds`` are
    given, the slope bounds ``lam <= c' <= Lam``) is checked on a uniform grid
    of ``samples`` points in ``[-radius, radius]``.
    """

    def __init__(self, c, bounds=None, radius=10.0, samples=2001, tol=1e-9):
        self.c = c
        t = np.linspace(-radius, radius, samples)
        ct = self(t)
        if ct.shape != t.shape or not np.all(np.isfinite(ct)):
            raise ValidationError("profile must map arrays to finite arrays of the same shape")
        slopes = np.diff(ct) / np.diff(t)
        if np.any(slopes < -tol):
            k = int(np.argmin(slopes))
            raise ValidationError(f"profile decreases on [{t[k]:.4g}, {t[k + 1]:.4g}]")
        if bounds is not None:
            lam, Lam = _check_bounds(*bounds)
            if slopes.min() < lam - tol or slopes.max() > Lam + tol:
                raise ValidationError(
                    f"sampled slopes in [{slopes.min():.6g}, {slopes.max():.6g}] "
                    f"violate bounds [{lam}, {Lam}]")
            bounds = (lam, Lam)
        self.bounds = bounds

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.c(t), dtype=float)


class MonotoneDifferenceOperator(Operator):
    """``J(u, x) = sum_y w(y, x) c(u(y) - u(x))`` for a monotone profile ``c``."""

    kind = "j"

    def __init__(self, profile, graph):
        if not isinstance(profile, MonotoneProfile):
            profile = MonotoneProfile(profile)
        self.profile = profile
        self.graph = graph
        self.n = graph.n

    def _eval(self, u, x):
        return eval_J(self.profile, self.graph, u, x)


class PucciJMinus(Operator):
    """Minimal (Pucci-type) operator associated with ``J`` and bounds ``lam <= Lam``."""

    kind = "pucci-j"

    def __init__(self, graph, lam, Lam):
        self.graph = graph
        self.lam, self.Lam = _check_bounds(lam, Lam)
        self.n = graph.n

    def _eval(self, u, x):
        return eval_pucci_J_minus(self.graph, self.lam, self.Lam, u, x)


class Hamiltonian(Operator):
    """Operator built from ``H(p, s, x)`` as ``I(u, x) = H(-grad u(x), -u(x), x)``.

    ``grad u(x)`` is the vector of differences ``u(x) - u(x_j)``, whose entry at
    ``x`` vanishes, so ``H`` is only ever called on such vectors.
    """

    kind = "hamiltonian"

    def __init__(self, H, n):
        self.H = H
        self.n = int(n)

    def _eval(self, u, x):
        return float(self.H(-discrete_gradient(u, x), -u[x], x))


def wrap_hamiltonian(H, n):
    return Hamiltonian(H, n)


def hamiltonian_of(operator):
    """The function ``H(p, s, x)`` that ``wrap_hamiltonian`` maps back to ``operator``.

    Only defined on difference-gradients (``p[x] == 0``): it evaluates the
    operator at ``u_j = p_j - s``, for which ``-grad u(x) = p`` and ``-u(x) = s``.
    """

    def H(p, s, x):
        p = np.asarray(p, dtype=float)
        return operator(p - s, x)

    return H


def operator_from_config(config, graph=None, kernel=None, family=None):
    """Build an operator from a JSON-style configuration dictionary.

    ``config["kind"]`` is one of ``linear``, ``bellman``, ``extremal-minus``,
    ``extremal-plus``, ``eikonal``, ``peikonal``, ``pucci-j``. Graph-based
    kinds take ``form`` (default ``"i"``) and, where relevant, ``p``,
    ``lambda`` and ``Lambda``. Kinds ``j`` and ``hamiltonian`` need Python
    callables and cannot be built from a configuration.
    """
    kind = config.get("kind")
    form = config.get("form", "i")

    def need(obj, name):
        if obj is None:
            raise ValidationError(f"operator kind {kind!r} requires --{name}")
        return obj

    if kind == "linear":
        if kernel is None and family is not None and len(family) == 1:
            kernel = family[0]
        return LinearGenerator(need(kernel, "kernel"))
    if kind == "bellman":
        return BellmanInf(need(family, "family"))
    if kind in ("extremal-minus", "extremal-plus"):
        return Extremal(need(family, "family"), kind.split("-")[1])
    if kind == "eikonal":
        return Eikonal(need(graph, "graph"), form)
    if kind == "peikonal":
        if "p" not in config:
            raise ValidationError("operator kind 'peikonal' requires p")
        return PEikonal(need(graph, "graph"), config["p"], form)
    if kind == "pucci-j":
        try:
            return PucciJMinus(need(graph, "graph"), config["lambda"], config["Lambda"])
        except KeyError as e:
            raise ValidationError(f"operator kind 'pucci-j' requires {e.args[0]}")
    if kind in ("j", "hamiltonian"):
        raise ValidationError(f"operator kind {kind!r} needs a Python callable and is library-only")
    raise ValidationError(f"unknown operator kind {kind!r}")

