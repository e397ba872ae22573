"""Randomized property checks for operators and solutions.

Each check returns a :class:`CheckReport`. A check passes when its worst
violation is at most the slack, ``1e-12 * (1 + sup-norms of the inputs)``
unless overridden. Failing checks carry a witness that reproduces the
violation when re-evaluated.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .graph import ValidationError, as_boundary, as_function, sup_norm
from .operators import PEikonal

DEFAULT_SLACK = 1e-12
FD_STEP = 1e-5
FD_RTOL = 1e-6


def _scaled(slack, *arrays):
    return slack * (1.0 + max((sup_norm(np.atleast_1d(a)) for a in arrays), default=0.0))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


@dataclass
class CheckReport:
    passed: bool
    trials: int
    worst_violation: float
    witness: dict = None
    certificates: list = field(default_factory=list)
    skipped: int = 0

    def to_dict(self):
        d = {"passed": bool(self.passed), "trials": int(self.trials),
             "worst_violation": float(self.worst_violation)}
        if self.witness is not None:
            d["witness"] = _jsonable(self.witness)
        return d

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass
class ConvexCertificate:
    """Gradient and conjugate value of ``u -> I_p(u, x)`` at a base point ``v``."""

    vertex: int
    gradient: np.ndarray
    legendre_value: float
    support_gap: float


class _Tracker:
    """Keeps the worst (violation - slack) excess and the first witness that exceeds the slack."""

    def __init__(self):
        self.worst = 0.0
        self.witness = None

    def record(self, violation, slack, witness):
        self.worst = max(self.worst, violation)
        if violation > slack and self.witness is None:
            self.witness = witness()

    def report(self, trials, **kw):
        return CheckReport(self.witness is None, trials, self.worst, self.witness, **kw)


def _random_function(rng, n, scale):
    return rng.uniform(-scale, scale, n)


def _random_deficit(rng, n, x0, scale):
    d = rng.uniform(0.0, scale, n) * (rng.random(n) < 0.7)
    d[x0] = 0.0
    return d


def check_gcp(operator, trials=1000, seed=0, slack=DEFAULT_SLACK, scale=10.0):
    """Global comparison property: ``u <= v``, ``u(x0) = v(x0)`` implies ``I(u, x0) <= I(v, x0)``.

    Touching pairs are built as ``u = v - d`` with a random deficit ``d >= 0``
    that vanishes at ``x0``, so the premise holds exactly.
    """
    rng = np.random.default_rng(seed)
    n = operator.n
    t = _Tracker()
    for _ in range(trials):
        x0 = int(rng.integers(n))
        v = _random_function(rng, n, scale)
        d = _random_deficit(rng, n, x0, scale)
        u = v - d
        iu, iv = operator(u, x0), operator(v, x0)
        t.record(iu - iv, _scaled(slack, u, v, iu, iv), lambda: {"u": u.copy(), "v": v.copy(), "x": x0})
    return t.report(trials)


def check_constant_monotonicity(operator, trials=1000, seed=0, slack=DEFAULT_SLACK, scale=10.0):
    """``I(u - c, x) >= I(u, x)`` for every constant ``c >= 0`` and every vertex."""
    rng = np.random.default_rng(seed)
    n = operator.n
    t = _Tracker()
    for _ in range(trials):
        u = _random_function(rng, n, scale)
        c = float(rng.uniform(0.0, scale))
        a, b = operator.apply(u - c), operator.apply(u)
        x = int(np.argmax(b - a))
        t.record(b[x] - a[x], _scaled(slack, u, c, a, b),
                 lambda: {"u": u.copy(), "c": c, "x": x})
    return t.report(trials)


def check_differences_monotone(H, n, trials=1000, seed=0, slack=DEFAULT_SLACK, scale=10.0):
    """``H(p, s, x) <= H(q, t, x)`` for difference-gradients ``p <= q`` at ``x`` and ``s <= t``."""
    rng = np.random.default_rng(seed)
    t = _Tracker()
    for _ in range(trials):
        x = int(rng.integers(n))
        p = _random_function(rng, n, scale)
        p[x] = 0.0
        q = p + _random_deficit(rng, n, x, scale)
        s = float(rng.uniform(-scale, scale))
        tt = s + float(rng.uniform(0.0, scale))
        hp, hq = float(H(p, s, x)), float(H(q, tt, x))
        t.record(hp - hq, _scaled(slack, p, q, s, tt, hp, hq),
                 lambda: {"p": p.copy(), "q": q.copy(), "s": s, "t": tt, "x": x})
    return t.report(trials)


def check_comparison_conclusion(u, v, boundary, slack=1e-9):
    """``max_G (u - v)_+ <= max_boundary (u - v)_+`` (premises are the caller's job)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    boundary = as_boundary(boundary, len(u))
    pos = np.maximum(u - v, 0.0)
    violation = float(pos.max() - pos[boundary.mask].max())
    witness = None
    if violation > slack:
        witness = {"u": u.copy(), "v": v.copy(), "x": int(np.argmax(pos))}
    return CheckReport(witness is None, 1, violation, witness)


def check_max_subsolution(operator, u1, u2, f, boundary, slack=DEFAULT_SLACK):
    """The pointwise max of two subsolutions of ``I(u) = f`` is a subsolution."""
    n = operator.n
    boundary = as_boundary(boundary, n)
    f = as_function(f, n, "f")
    inner = boundary.interior
    for name, u in (("u1", u1), ("u2", u2)):
        u = as_function(u, n, name)
        vals = operator.apply(u)
        s = _scaled(slack, u, f, vals)
        bad = inner[vals[inner] < f[inner] - s]
        if bad.size:
            x = int(bad[0])
            raise ValidationError(f"{name} is not a subsolution at vertex {x}: I = {float(vals[x])!r} < f = {float(f[x])!r}")
    w = np.maximum(as_function(u1, n), as_function(u2, n))
    vals = operator.apply(w)
    gap = f[inner] - vals[inner]
    k = int(np.argmax(gap))
    violation = float(gap[k])
    witness = None
    if violation > _scaled(slack, w, f, vals):
        witness = {"u": w, "x": int(inner[k])}
    return CheckReport(witness is None, 1, violation, witness)


def check_positive_perturbation(operator, boundary, constant=1.0, steps=(1e-2, 1e-4, 1e-6),
                                trials=100, seed=0, slack=DEFAULT_SLACK, scale=10.0):
    """Finite surrogate of the bump perturbation property.

    Checks ``min_x [I(u + t b_x0, x) - I(u, x)] >= -constant * t`` over interior
    ``x`` for each step ``t`` and random ``u``, ``x0``.
    """
    rng = np.random.default_rng(seed)
    n = operator.n
    inner = as_boundary(boundary, n).interior
    t = _Tracker()
    for _ in range(trials):
        u = _random_function(rng, n, scale)
        x0 = int(rng.integers(n))
        base = operator.apply(u)
        for step in steps:
            up = u.copy()
            up[x0] += step
            diff = operator.apply(up)[inner] - base[inner]
            k = int(np.argmin(diff))
            t.record(-constant * step - diff[k], _scaled(slack, u, base),
                     lambda: {"u": u.copy(), "x0": x0, "t": step, "x": int(inner[k])})
    return t.report(trials * len(steps))


def check_strict_perturbation(operator, u, boundary, kind="homogeneous", ks=(1, 2, 5, 10, 100)):
    """Check ``I(u_k) > I(u)`` inside for the standard approximating sequences.

    ``kind="homogeneous"`` uses ``u_k = u (k + 1) / k`` (positively homogeneous
    operators with ``I(u) > 0``); ``kind="proper"`` uses ``u_k = u - 1 / k``
    (strictly proper operators).
    """
    n = operator.n
    u = as_function(u, n)
    inner = as_boundary(boundary, n).interior
    base = operator.apply(u)[inner]
    worst = -np.inf
    witness = None
    for k in ks:
        uk = u * (k + 1) / k if kind == "homogeneous" else u - 1.0 / k
        if kind not in ("homogeneous", "proper"):
            raise ValidationError(f"unknown perturbation kind {kind!r}")
        gain = operator.apply(uk)[inner] - base
        j = int(np.argmin(gain))
        worst = max(worst, -gain[j])
        if gain[j] <= 0 and witness is None:
            witness = {"u": u.copy(), "k": k, "x": int(inner[j])}
    return CheckReport(witness is None, len(ks), float(worst), witness)


def estimate_lipschitz(operator, radius=1.0, trials=200, seed=0):
    """Largest sampled ratio ``|I(u, x) - I(v, x)| / ||u - v||`` over the ball of radius ``radius``."""
    rng = np.random.default_rng(seed)
    n = operator.n
    best = 0.0
    for _ in range(trials):
        u = rng.uniform(-radius, radius, n)
        v = rng.uniform(-radius, radius, n)
        gap = sup_norm(u - v)
        if gap > 0:
            best = max(best, sup_norm(operator.apply(u) - operator.apply(v)) / gap)
    return best


def _central_difference(phi, v, k, h):
    e = np.zeros_like(v)
    e[k] = h
    return (phi(v + e) - phi(v - e)) / (2 * h)


def check_convex_representation(graph, p, trials=1000, seed=0, ball_radius=1.0,
                                slack=DEFAULT_SLACK, fd_step=FD_STEP, fd_rtol=FD_RTOL,
                                keep_certificates=False):
    """Check the convex structure of ``phi_x(u) = I_p(u, x)`` for ``p > 1``.

    For random ``u``, ``v`` in the sup-norm ball of radius ``ball_radius`` and
    each vertex ``x``:

    * the closed-form gradient at ``v`` matches central differences (step
      ``fd_step``) within ``fd_rtol * (1 + |grad|)``; coordinates whose
      difference ``v_k - v_x`` lies within ``10 * fd_step`` of the kink at 0
      are skipped and counted in ``skipped``;
    * the gradient entries sum to zero;
    * the support inequality ``phi(u) >= phi(v) + grad(v).(u - v)`` holds,
      i.e. the affine minorant ``grad(v).u - phi*(grad(v))`` with
      ``phi*(grad(v)) = grad(v).v - phi(v)`` stays below ``phi(u)``;
    * the minorant taken at ``v = u`` reproduces ``phi(u)`` within ``1e-10``.
    """
    if not p > 1:
        raise ValidationError("the convex representation check needs p > 1")
    op = PEikonal(graph, p, "i")
    rng = np.random.default_rng(seed)
    n = graph.n
    t = _Tracker()
    certs = []
    skipped = 0
    for _ in range(trials):
        u = rng.uniform(-ball_radius, ball_radius, n)
        v = rng.uniform(-ball_radius, ball_radius, n)
        for x in range(n):
            def phi(z, x=x):
                return op(z, x)

            grad = op.gradient(v, x)
            phi_v, phi_u = phi(v), phi(u)
            s = _scaled(slack, u, v, grad, phi_u, phi_v)

            # gradient vs central differences, away from the kinks
            near_kink = np.abs(v - v[x]) < 10 * fd_step
            near_kink[x] = np.any(near_kink[np.arange(n) != x] & (graph.weights[:, x] > 0)[np.arange(n) != x])
            for k in range(n):
                if near_kink[k] and (k == x or graph.weights[k, x] > 0):
                    skipped += 1
                    continue
                fd = _central_difference(phi, v, k, fd_step)
                err = abs(fd - grad[k]) - fd_rtol * (1 + abs(grad[k]))
                t.record(err, 0.0, lambda: {"check": "gradient", "v": v.copy(), "x": x, "k": k})

            t.record(abs(grad.sum()), s, lambda: {"check": "gradient-sum", "v": v.copy(), "x": x})

            legendre = float(grad @ v - phi_v)
            minorant = float(grad @ u - legendre)
            gap = phi_u - minorant
            t.record(-gap, s, lambda: {"check": "support", "u": u.copy(), "v": v.copy(), "x": x})

            g_u = op.gradient(u, x)
            at_u = float(g_u @ u - (g_u @ u - phi_u))
            t.record(abs(at_u - phi_u) - 1e-10, 0.0,
                     lambda: {"check": "attained", "u": u.copy(), "x": x})
            if keep_certificates:
                certs.append(ConvexCertificate(x, grad, legendre, gap))
    return t.report(trials, certificates=certs, skipped=skipped)
