"""Command line front end.

Exit codes: 0 success or converged, 2 validation error (including bad usage),
3 infeasible, non-converged or failed check, 4 internal error. Results go to
stdout as JSON (default) or CSV; diagnostics go to stderr.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import io, solvers, stochastic, verification
from .graph import ValidationError, path_distance, policy_kernel
from .operators import hamiltonian_of, operator_from_config

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

logger = logging.getLogger("graphhjb")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


def _fmt(v):
    v = float(v)
    if np.isfinite(v):
        return repr(v)
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else _fmt(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(args, payload, values_key=None):
    """Write ``payload`` as JSON, or as CSV (``index,value`` for ``values_key``, else ``key,value``)."""
    if args.output == "json":
        return json.dumps(_clean(payload)) + "\n"
    if values_key is not None:
        return "".join(f"{i},{_fmt(v)}\n" for i, v in enumerate(payload[values_key]))
    rows = []
    for k, v in payload.items():
        if isinstance(v, (dict, list, tuple, np.ndarray)):
            v = json.dumps(_clean(v))
        elif isinstance(v, (float, np.floating)):
            v = _fmt(v)
        rows.append(f"{k},{v}\n")
    return "".join(rows)


# --- argument groups -------------------------------------------------------

def _add(p, *names):
    opts = {
        "graph": dict(help="graph JSON file"),
        "boundary": dict(help="boundary: JSON array of vertex indices, inline or a file"),
        "f": dict(default="zeros", help="running cost / right-hand side: JSON, CSV, 'ones' or 'zeros'"),
        "g": dict(default="zeros", help="boundary data (entries off the boundary are ignored)"),
        "kernel": dict(help="transition kernel JSON file (n x n matrix)"),
        "family": dict(help="kernel family JSON file (array of n x n matrices)"),
        "p": dict(type=float, default=None, help="exponent of the p-eikonal operator (p >= 1)"),
        "lambda": dict(type=float, default=None, dest="lam", help="lower Pucci ellipticity constant"),
        "Lambda": dict(type=float, default=None, dest="Lam", help="upper Pucci ellipticity constant"),
        "tol": dict(type=float, default=solvers.DEFAULT_TOL, help="solver tolerance"),
        "max-iter": dict(type=int, default=solvers.DEFAULT_MAX_ITER, help="maximum solver iterations"),
        "seed": dict(type=int, default=0, help="random seed"),
        "samples": dict(type=int, default=10000, help="Monte Carlo samples"),
        "max-steps": dict(type=int, default=stochastic.DEFAULT_MAX_STEPS, help="per-sample step cap"),
        "trials": dict(type=int, default=1000, help="number of random trials"),
        "form": dict(choices=("h", "i"), default="i",
                     help="operator sign convention: i (comparison form) or h (Hamiltonian form)"),
        "normalize": dict(action="store_true", help="renormalize kernel rows instead of rejecting them"),
        "operator": dict(help="operator config: JSON object or file with key 'kind' (p, lambda, Lambda, form optional)"),
        "start": dict(default=None, help="starting subsolution (default: built-in barrier)"),
        "policy": dict(default=None, help="stationary control: JSON array of kernel indices per vertex"),
        "x0": dict(type=int, default=None, help="start vertex (default: every interior vertex)"),
        "w": dict(help="test function for Dynkin's formula"),
        "method": dict(choices=("value", "policy"), default="value", help="Bellman solver"),
        "exponent": dict(type=float, default=1.0, help="edge cost is weight**(-exponent)"),
        "orientation": dict(choices=("inbound", "outbound"), default="inbound",
                            help="paths run into the boundary along edges (inbound) or out of it"),
        "workers": dict(type=int, default=1, help="simulation threads (results do not depend on it)"),
    }
    for name in names:
        p.add_argument(f"--{name}", **opts[name])
    p.add_argument("--output", choices=("json", "csv"), default="json", help="output format")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="graphhjb", description="Hamilton-Jacobi-Bellman equations on finite graphs",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="path distance to the boundary", formatter_class=fmt)
    _add(p, "graph", "boundary", "exponent", "orientation")

    solve = sub.add_parser("solve", help="solve a boundary value problem", formatter_class=fmt)
    ss = solve.add_subparsers(dest="problem", required=True, parser_class=_Parser)
    _add(ss.add_parser("linear", help="linear exit problem", formatter_class=fmt),
         "kernel", "boundary", "f", "g", "normalize")
    _add(ss.add_parser("bellman", help="optimal control problem", formatter_class=fmt),
         "family", "boundary", "f", "g", "method", "tol", "max-iter", "normalize")
    _add(ss.add_parser("eikonal", help="eikonal equation", formatter_class=fmt),
         "graph", "boundary", "f", "g", "form")
    _add(ss.add_parser("peikonal", help="p-eikonal equation", formatter_class=fmt),
         "graph", "boundary", "f", "g", "p", "form", "tol", "max-iter")
    _add(ss.add_parser("perron", help="generic monotone solve by Perron sweeps", formatter_class=fmt),
         "operator", "graph", "kernel", "family", "boundary", "f", "g", "p", "lambda", "Lambda", "form",
         "start", "tol", "max-iter", "normalize")

    check = sub.add_parser("check", help="randomized property checks", formatter_class=fmt)
    cs = check.add_subparsers(dest="check", required=True, parser_class=_Parser)
    for name, text in (("gcp", "global comparison property"),
                       ("constant", "monotonicity under constant shifts"),
                       ("differences", "differences-monotone Hamiltonian")):
        _add(cs.add_parser(name, help=text, formatter_class=fmt),
             "operator", "graph", "kernel", "family", "p", "lambda", "Lambda", "form", "trials", "seed",
             "normalize")
    _add(cs.add_parser("convex", help="convex representation of the p-eikonal operator", formatter_class=fmt),
         "graph", "p", "trials", "seed")

    _add(sub.add_parser("simulate", help="Monte Carlo exit cost", formatter_class=fmt),
         "kernel", "family", "policy", "boundary", "f", "g", "x0", "samples", "seed", "max-steps", "workers",
         "normalize")
    _add(sub.add_parser("dynkin", help="Monte Carlo check of Dynkin's formula", formatter_class=fmt),
         "kernel", "boundary", "w", "x0", "samples", "seed", "max-steps", "normalize")
    _add(sub.add_parser("certify", help="uniform exit-time certificate", formatter_class=fmt),
         "family", "boundary", "tol", "max-iter", "normalize")
    return parser


# --- ingestion -------------------------------------------------------------

def _required(args, name):
    v = getattr(args, name.replace("-", "_"), None)
    if v is None:
        raise ValidationError(f"--{name} is required for this command")
    return v


class Problem:
    """Validated inputs for one command; only the pieces the command asked for are loaded."""

    def __init__(self, args):
        self.args = args
        norm = getattr(args, "normalize", False)
        self.graph = io.load_graph(args.graph) if getattr(args, "graph", None) else None
        self.kernel = io.load_kernel(args.kernel, norm) if getattr(args, "kernel", None) else None
        self.family = io.load_family(args.family, norm) if getattr(args, "family", None) else None
        sizes = {name: obj.n for name, obj in
                 (("graph", self.graph), ("kernel", self.kernel), ("family", self.family)) if obj is not None}
        if len(set(sizes.values())) > 1:
            raise ValidationError(f"inconsistent vertex counts: {sizes}")
        self.n = next(iter(sizes.values()), None)
        if self.n is None:
            raise ValidationError("one of --graph, --kernel or --family is required")
        self.boundary = io.load_boundary(args.boundary, self.n) if getattr(args, "boundary", None) else None

    def function(self, name):
        return io.load_function(_required(self.args, name), self.n, name)

    def need_boundary(self):
        if self.boundary is None:
            raise ValidationError("--boundary is required for this command")
        return self.boundary

    def operator(self):
        a = self.args
        config = dict(io.load_operator_config(_required(a, "operator")))
        for key, val in (("p", a.p), ("lambda", a.lam), ("Lambda", a.Lam)):
            if val is not None:
                config[key] = val
        config.setdefault("form", a.form)
        return operator_from_config(config, graph=self.graph, kernel=self.kernel, family=self.family)


# --- commands --------------------------------------------------------------

def _report(args, rep):
    out = _emit(args, rep.to_dict(), "solution")
    return out, (EXIT_OK if rep.status == solvers.CONVERGED else EXIT_INFEASIBLE)


def cmd_distance(args):
    pb = Problem(args)
    if pb.graph is None:
        raise ValidationError("--graph is required for distance")
    d = path_distance(pb.graph, pb.need_boundary(), args.exponent, args.orientation)
    return _emit(args, {"distance": d}, "distance"), EXIT_OK


def cmd_solve(args):
    pb = Problem(args)
    b = pb.need_boundary()
    f, g = pb.function("f"), pb.function("g")
    kind = args.problem
    if kind == "linear":
        rep = solvers.solve_linear_exit(_required(pb, "kernel"), f, g, b)
    elif kind == "bellman":
        fam = _required(pb, "family")
        if args.method == "value":
            rep = solvers.value_iteration_bellman(fam, f, g, b, args.tol, args.max_iter)
        else:
            rep = solvers.policy_iteration_bellman(fam, f, g, b, args.tol, min(args.max_iter, 10**6))
    elif kind == "eikonal":
        rep = solvers.solve_eikonal(_required(pb, "graph"), f, g, b, form=args.form)
    elif kind == "peikonal":
        rep = solvers.solve_peikonal(_required(pb, "graph"), _required(args, "p"), f, g, b,
                                     form=args.form, tol=args.tol, max_iter=args.max_iter)
    else:
        op = pb.operator()
        if args.start is not None:
            start = pb.function("start")
        else:
            start = solvers.default_subsolution(op, f, g, b, args.tol)
        rep = solvers.perron_gauss_seidel(op, f, g, b, start, args.tol, args.max_iter)
    return _report(args, rep)


def cmd_check(args):
    pb = Problem(args)
    if args.check == "convex":
        rep = verification.check_convex_representation(_required(pb, "graph"), _required(args, "p"),
                                                       args.trials, args.seed)
    elif args.check == "differences":
        op = pb.operator()
        rep = verification.check_differences_monotone(hamiltonian_of(op), op.n, args.trials, args.seed)
    else:
        fn = verification.check_gcp if args.check == "gcp" else verification.check_constant_monotonicity
        rep = fn(pb.operator(), args.trials, args.seed)
    return _emit(args, rep.to_dict()), (EXIT_OK if rep.passed else EXIT_INFEASIBLE)


def _starts(pb):
    if pb.args.x0 is not None:
        if not 0 <= pb.args.x0 < pb.n:
            raise ValidationError(f"--x0 {pb.args.x0} outside 0..{pb.n - 1}")
        return [pb.args.x0]
    return [int(x) for x in pb.boundary.interior]


def _mc_output(args, results):
    if len(results) == 1:
        payload = results[0][1].to_dict()
    else:
        payload = {"estimates": [dict(x0=x, **est.to_dict()) for x, est in results]}
    return _emit(args, payload)


def cmd_simulate(args):
    pb = Problem(args)
    b = pb.need_boundary()
    f, g = pb.function("f"), pb.function("g")
    if pb.kernel is not None:
        kernel = pb.kernel
    elif pb.family is not None:
        if args.policy is None and len(pb.family) > 1:
            raise ValidationError("--policy is required with a kernel family of more than one kernel")
        policy = io.load_function(args.policy, pb.n, "policy") if args.policy else np.zeros(pb.n)
        if not np.all(policy == np.round(policy)):
            raise ValidationError("--policy entries must be kernel indices")
        kernel = policy_kernel(pb.family, policy.astype(int))
    else:
        raise ValidationError("--kernel or --family is required for simulate")
    results = [(x, stochastic.estimate_exit_functional(kernel, f, g, b, x, args.samples, args.seed,
                                                       args.max_steps, args.workers))
               for x in _starts(pb)]
    return _mc_output(args, results), EXIT_OK


def cmd_dynkin(args):
    pb = Problem(args)
    b = pb.need_boundary()
    w = pb.function("w")
    kernel = _required(pb, "kernel")
    results = [(x, stochastic.verify_dynkin(kernel, w, b, x, args.samples, args.seed, args.max_steps))
               for x in _starts(pb)]
    return _mc_output(args, results), EXIT_OK


def cmd_certify(args):
    pb = Problem(args)
    cert = solvers.certify_exit_time(_required(pb, "family"), pb.need_boundary(), args.tol, args.max_iter)
    return _emit(args, cert.to_dict()), (EXIT_OK if cert.feasible else EXIT_INFEASIBLE)


COMMANDS = {"distance": cmd_distance, "solve": cmd_solve, "check": cmd_check,
            "simulate": cmd_simulate, "dynkin": cmd_dynkin, "certify": cmd_certify}


def main(argv=None, stdout=None, stderr=None):
    """Run one command; returns the process exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    logging.basicConfig(stream=stderr, level=logging.WARNING, format="graphhjb: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        out, code = COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_VALIDATION
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=stderr)
        return EXIT_INTERNAL
    stdout.write(out)
    if code == EXIT_INFEASIBLE:
        print("error: problem is infeasible or did not converge", file=stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
