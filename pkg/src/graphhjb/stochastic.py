"""Markov chain simulation and Monte Carlo checks of the exit-cost representation.

Random numbers come from a counter-based stream: the uniform used by sample
``i`` at step ``t`` is a hash of ``(seed, i, t)``. A trajectory therefore does
not depend on how samples are batched or split across workers, and
:func:`sample_path` reproduces any single sample of a batch estimate.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .graph import ValidationError, as_boundary, as_family, as_function, as_kernel, policy_kernel

logger = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10**6
CENSOR_WARN_FRACTION = 0.01

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    # SplitMix64 finalizer; uint64 arrays wrap on overflow
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_keys(seed, samples):
    base = _mix64(np.array([int(seed) % 2**64], dtype=np.uint64))
    idx = np.asarray(samples, dtype=np.uint64) + np.uint64(1)
    return _mix64(base + idx * _GAMMA)


def _uniforms(keys, step):
    h = _mix64(keys + np.array([step + 1], dtype=np.uint64) * _M2)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _next_states(kernel, states, uniforms):
    cdf = kernel.cdf[states]
    nxt = np.sum(cdf <= uniforms[:, None], axis=1)
    # a draw past the rounded row total lands on the row's last atom
    overflow = nxt >= kernel.n
    nxt[overflow] = kernel.last_atom[states[overflow]]
    return nxt


@dataclass
class Trajectory:
    states: tuple
    exit_time: int
    censored: bool
    seed: int
    sample: int = 0


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    samples: int
    censored: int
    warning: str = ""

    def to_dict(self):
        d = {"mean": self.mean, "stderr": self.stderr, "samples": self.samples, "censored": self.censored}
        if self.warning:
            d["warning"] = self.warning
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    def within(self, value, k=4.0):
        """True when ``|mean - value| <= k * stderr``."""
        return abs(self.mean - value) <= k * self.stderr


def sample_path(kernel, x0, boundary, seed, max_steps=DEFAULT_MAX_STEPS, sample=0):
    """Simulate one chain from ``x0`` until it hits the boundary or ``max_steps`` elapse."""
    kernel = as_kernel(kernel)
    boundary = as_boundary(boundary, kernel.n)
    if max_steps < 1:
        raise ValidationError("max_steps must be at least 1")
    keys = _stream_keys(seed, [sample])
    state = np.array([int(x0)])
    states = [int(x0)]
    t = 0
    while not boundary.mask[state[0]]:
        if t == max_steps:
            return Trajectory(tuple(states), t, True, seed, sample)
        state = _next_states(kernel, state, _uniforms(keys, t))
        states.append(int(state[0]))
        t += 1
    return Trajectory(tuple(states), t, False, seed, sample)


def _simulate_batch(kernel, mask, x0, keys, max_steps, running, final):
    """Run a batch to absorption; returns per-sample ``sum running(X_t) + final(X_tau)`` and censor flags."""
    m = len(keys)
    states = np.full(m, int(x0))
    acc = np.zeros(m)
    active = np.flatnonzero(~mask[states])
    t = 0
    while active.size and t < max_steps:
        s = states[active]
        acc[active] += running[s]
        s = _next_states(kernel, s, _uniforms(keys[active], t))
        states[active] = s
        active = active[~mask[s]]
        t += 1
    censored = np.zeros(m, dtype=bool)
    censored[active] = True
    done = ~censored
    acc[done] += final[states[done]]
    return acc, censored


def _run(kernel, boundary, x0, samples, seed, max_steps, running, final, workers):
    if samples < 1:
        raise ValidationError("samples must be at least 1")
    if not 0 <= x0 < kernel.n:
        raise ValidationError(f"start vertex {x0} out of range")
    keys = _stream_keys(seed, np.arange(samples))
    mask = boundary.mask
    if workers <= 1:
        values, censored = _simulate_batch(kernel, mask, x0, keys, max_steps, running, final)
    else:
        chunks = np.array_split(keys, workers)
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(
                lambda k: _simulate_batch(kernel, mask, x0, k, max_steps, running, final), chunks))
        values = np.concatenate([p[0] for p in parts])
        censored = np.concatenate([p[1] for p in parts])
    return _summarize(values, censored)


def _summarize(values, censored):
    used = values[~censored]
    n_cens = int(censored.sum())
    warning = ""
    if n_cens > CENSOR_WARN_FRACTION * len(values):
        warning = f"{n_cens} of {len(values)} samples censored; estimate is biased"
        logger.warning(warning)
    if used.size == 0:
        return MCEstimate(math.nan, math.nan, len(values), n_cens, warning)
    mean = float(np.mean(used))
    stderr = float(np.std(used, ddof=1) / math.sqrt(used.size)) if used.size > 1 else 0.0
    return MCEstimate(mean, stderr, len(values), n_cens, warning)


def estimate_exit_functional(kernel, f, g, boundary, x0, samples, seed,
                             max_steps=DEFAULT_MAX_STEPS, workers=1):
    """Monte Carlo estimate of ``E_x0 [sum_{t < tau} f(X_t) + g(X_tau)]``.

    Censored samples (no exit within ``max_steps``) are excluded from the mean
    and counted in ``censored``; more than 1% censored attaches a warning.
    """
    kernel = as_kernel(kernel)
    boundary = as_boundary(boundary, kernel.n)
    f = as_function(f, kernel.n, "f")
    g = as_function(g, kernel.n, "g")
    running = np.where(boundary.mask, 0.0, f)
    return _run(kernel, boundary, int(x0), samples, seed, max_steps, running, g, workers)


def verify_dynkin(kernel, w, boundary, x0, samples, seed, max_steps=DEFAULT_MAX_STEPS, workers=1):
    """Estimate the defect ``E_x0 [w(X_tau) - sum_{t < tau} L(w, X_t)] - w(x0)``.

    Dynkin's formula says the defect is zero for stopping times with finite
    mean.
    """
    kernel = as_kernel(kernel)
    boundary = as_boundary(boundary, kernel.n)
    w = as_function(w, kernel.n, "w")
    lw = kernel.matrix @ w - w
    running = np.where(boundary.mask, 0.0, -lw)
    est = _run(kernel, boundary, int(x0), samples, seed, max_steps, running, w, workers)
    est.mean -= w[int(x0)]
    return est


def dynkin_defects(kernel, w, boundary, x0, samples, seed, max_steps=DEFAULT_MAX_STEPS):
    """Per-sample defects ``w(X_tau) - sum_{t < tau} L(w, X_t) - w(x0)`` (censored samples are NaN)."""
    kernel = as_kernel(kernel)
    boundary = as_boundary(boundary, kernel.n)
    w = as_function(w, kernel.n, "w")
    lw = kernel.matrix @ w - w
    running = np.where(boundary.mask, 0.0, -lw)
    keys = _stream_keys(seed, np.arange(samples))
    acc, censored = _simulate_batch(kernel, boundary.mask, int(x0), keys, max_steps, running, w)
    acc -= w[int(x0)]
    acc[censored] = np.nan
    return acc


def evaluate_policy_mc(family, policy, f, g, boundary, x0, samples, seed,
                       max_steps=DEFAULT_MAX_STEPS, workers=1):
    """Exit-cost estimate under the stationary control ``policy``."""
    kernel = policy_kernel(as_family(family), policy)
    return estimate_exit_functional(kernel, f, g, boundary, x0, samples, seed, max_steps, workers)
