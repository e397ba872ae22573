"""Reading and writing graphs, functions, boundaries and kernels.

Every loader accepts either a path or inline JSON text (so ``'[0, 3]'`` works
as a boundary argument) and raises :class:`ValidationError` messages that name
the source and the offending key, line or row.
"""

import json
import os

import numpy as np

from .graph import Boundary, Graph, KernelFamily, TransitionKernel, ValidationError


def _read(source):
    """Return ``(text, name)`` for a path or an inline JSON string."""
    source = str(source)
    if os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            return fh.read(), source
    stripped = source.lstrip()
    if stripped[:1] in "[{" and stripped:
        return source, "<inline>"
    raise ValidationError(f"{source}: file not found")


def _parse_json(text, name):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{name}: invalid JSON at line {e.lineno}: {e.msg}") from None


def _wrap(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ValidationError as e:
        raise ValidationError(f"{name}: {e}") from None


def load_graph(source):
    """Graph from ``{"n": int, "labels": [str], "edges": [[source, target, weight], ...]}``."""
    text, name = _read(source)
    obj = _parse_json(text, name)
    if not isinstance(obj, dict):
        raise ValidationError(f"{name}: graph file must be a JSON object")
    if "n" not in obj:
        raise ValidationError(f"{name}: missing key 'n'")
    n = obj["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError(f"{name}: key 'n' must be an integer")
    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise ValidationError(f"{name}: key 'edges' must be a list")
    w = np.zeros((n, n)) if n > 0 else np.zeros((0, 0))
    for k, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 3):
            raise ValidationError(f"{name}: edges[{k}] must be [source, target, weight]")
        s, t, wt = e
        if not all(isinstance(i, int) and not isinstance(i, bool) for i in (s, t)) \
                or not (0 <= s < n and 0 <= t < n):
            raise ValidationError(f"{name}: edges[{k}] has vertex indices outside 0..{n - 1}")
        if not isinstance(wt, (int, float)) or isinstance(wt, bool):
            raise ValidationError(f"{name}: edges[{k}] weight must be a number")
        w[s, t] = float(wt)
    return _wrap(name, Graph, w, obj.get("labels"))


def dump_graph(graph):
    n = graph.n
    w = graph.weights
    edges = [[int(i), int(j), float(w[i, j])] for i, j in zip(*np.nonzero(w))]
    return json.dumps({"n": n, "labels": list(graph.labels), "edges": edges})


def _constant(source):
    if source in ("ones", "zeros"):
        return 1.0 if source == "ones" else 0.0
    return None


def load_function(source, n, name="function"):
    """Length-``n`` float array from a JSON array, ``index,value`` CSV lines, or ``ones``/``zeros``."""
    c = _constant(str(source))
    if c is not None:
        return np.full(n, c)
    text, where = _read(source)
    if text.lstrip()[:1] in "[{":
        data = _parse_json(text, where)
        if isinstance(data, dict):
            # a solver report: take its solution
            data = data.get("solution")
        if not isinstance(data, list) or not all(_is_number(v) for v in data):
            raise ValidationError(f"{where}: {name} must be a JSON array of numbers")
        values = np.array([float(v) for v in data])
    else:
        values = np.full(n, np.nan)
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                i, v = int(parts[0]), float(parts[1])
                if len(parts) != 2:
                    raise ValueError
            except (ValueError, IndexError):
                if lineno == 1 and not parts[0].strip().lstrip("-").isdigit():
                    continue  # header row
                raise ValidationError(f"{where}: line {lineno}: expected 'index,value'") from None
            if not 0 <= i < n:
                raise ValidationError(f"{where}: line {lineno}: index {i} outside 0..{n - 1}")
            values[i] = v
        missing = np.flatnonzero(np.isnan(values))
        if missing.size:
            raise ValidationError(f"{where}: {name} has no value for index {int(missing[0])}")
    if values.shape != (n,):
        raise ValidationError(f"{where}: {name} has length {values.size}, expected {n}")
    return values


def _is_number(v):
    if isinstance(v, str):
        return v in ("inf", "-inf")
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def dump_function(u):
    """JSON array; ``repr`` floats so that :func:`load_function` round-trips bit-identically."""
    return "[" + ", ".join(_float_text(v) for v in np.asarray(u, dtype=float)) + "]"


def _float_text(v):
    if np.isfinite(v):
        return repr(float(v))
    # json.loads reads these tokens back as floats
    return "Infinity" if v > 0 else ("-Infinity" if v < 0 else "NaN")


def load_boundary(source, n):
    text, name = _read(source)
    data = _parse_json(text, name)
    if not isinstance(data, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in data):
        raise ValidationError(f"{name}: boundary must be a JSON array of vertex indices")
    return _wrap(name, Boundary, tuple(data), n)


def load_kernel(source, normalize=False):
    """Single ``n x n`` row-stochastic matrix (a one-element family is accepted too)."""
    text, name = _read(source)
    data = _parse_json(text, name)
    try:
        a = np.array(data, dtype=float)
    except (ValueError, TypeError):
        raise ValidationError(f"{name}: kernel must be a numeric matrix") from None
    if a.ndim == 3 and a.shape[0] == 1:
        a = a[0]
    if a.ndim != 2:
        raise ValidationError(f"{name}: kernel must be an n x n matrix")
    return _wrap(name, TransitionKernel, a, normalize=normalize)


def load_family(source, normalize=False):
    """JSON array of ``n x n`` row-stochastic matrices; a bare matrix is a family of one."""
    text, name = _read(source)
    data = _parse_json(text, name)
    try:
        a = np.array(data, dtype=float)
    except (ValueError, TypeError):
        raise ValidationError(f"{name}: family must be an array of equally sized matrices") from None
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise ValidationError(f"{name}: family must be an array of n x n matrices")
    kernels = []
    for i, m in enumerate(a):
        kernels.append(_wrap(f"{name}: kernel[{i}]", TransitionKernel, m, normalize=normalize))
    return _wrap(name, KernelFamily, kernels)


def dump_matrices(matrices):
    return json.dumps(np.asarray(matrices, dtype=float).tolist())


def load_operator_config(source):
    text, name = _read(source)
    obj = _parse_json(text, name)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValidationError(f"{name}: operator config must be an object with key 'kind'")
    return obj
