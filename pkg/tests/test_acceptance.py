"""Acceptance suite: one test per criterion, each timed against its runtime budget.

Every test prints a ``criterion N: PASS|FAIL`` line; the lines are repeated in
pytest's terminal summary. Run as a script for the lines alone:

    python tests/test_acceptance.py
"""

import time

import numpy as np

from graphhjb import (
    BellmanInf, Boundary, Eikonal, Extremal, LinearGenerator, LinearOperator,
    MonotoneDifferenceOperator, MonotoneProfile, PEikonal, PucciJMinus, certify_exit_time,
    check_comparison_conclusion, check_constant_monotonicity, check_convex_representation,
    check_differences_monotone, check_gcp, default_subsolution, enumerate_policies,
    estimate_exit_functional, evaluate_policy_mc, path_distance, perron_gauss_seidel,
    policy_iteration_bellman, solve_eikonal, solve_linear_exit, solve_peikonal,
    value_iteration_bellman, verify_dynkin, wrap_hamiltonian,
)
from graphhjb.generators import (
    chain_graph, random_boundary, random_digraph, random_family, random_kernel, shift_kernel,
    two_cycle_family,
)
from graphhjb.stochastic import dynkin_defects

RESULTS = {}


def record(k, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  ({detail}; {elapsed:.2f}s of {budget:g}s)"
    RESULTS[k] = line
    print(line)
    return ok


def _instance(rng, nmin, nmax):
    n = int(rng.integers(nmin, nmax + 1))
    return n, random_boundary(n, rng)


# 1 ---------------------------------------------------------------------------------

def test_criterion_1_eikonal_distance_identity():
    rng = np.random.default_rng(1)
    cases = []
    for _ in range(50):
        n, b = _instance(rng, 2, 50)
        cases.append((random_digraph(n, rng, b), b))
    t0 = time.perf_counter()
    worst = 0.0
    for g, b in cases:
        rep = solve_eikonal(g, 1.0, 0.0, b, form="h")
        d = path_distance(g, b)
        worst = max(worst, float(np.max(np.abs(rep.solution - d))))
    el = time.perf_counter() - t0
    assert record(1, worst <= 1e-12, f"max |u - d| = {worst:.1e} over 50 digraphs", el, 1.0)


# 2 ---------------------------------------------------------------------------------

def test_criterion_2_probabilistic_representation():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, checks = 0.0, 0
    for i in range(10):
        n, b = _instance(rng, 3, 10)
        k = random_kernel(n, rng, b)
        f = rng.uniform(0, 1, n)
        g = rng.uniform(-1, 1, n)
        exact = solve_linear_exit(k, f, g, b).solution
        for x in b.interior:
            est = estimate_exit_functional(k, f, g, b, int(x), 10**5, seed=1000 * i + int(x))
            z = abs(est.mean - exact[x]) / est.stderr if est.stderr > 0 else (0.0 if est.mean == exact[x] else np.inf)
            worst = max(worst, z)
            checks += 1
    el = time.perf_counter() - t0
    assert record(2, worst <= 4, f"max |u - mean| / stderr = {worst:.2f} over {checks} starts", el, 30.0)


# 3 ---------------------------------------------------------------------------------

def test_criterion_3_bellman_oracles():
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(25):
        n, b = _instance(rng, 3, 6)
        fam = random_family(n, rng, b, int(rng.integers(1, 4)))
        f, g = rng.uniform(-1, 1, (2, n))
        vi = value_iteration_bellman(fam, f, g, b, tol=1e-12)
        pi = policy_iteration_bellman(fam, f, g, b)
        en, _ = enumerate_policies(fam, f, g, b)
        assert vi.converged and pi.converged
        worst = max(worst, np.abs(vi.solution - en).max(), np.abs(pi.solution - en).max(),
                    np.abs(vi.solution - pi.solution).max())
    el = time.perf_counter() - t0
    assert record(3, worst <= 1e-9, f"max disagreement {worst:.1e} over 25 instances", el, 10.0)


# 4 ---------------------------------------------------------------------------------

def test_criterion_4_exit_time_certificate():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst_margin = -np.inf
    for i in range(10):
        n, b = _instance(rng, 3, 8)
        fam = random_family(n, rng, b, int(rng.integers(2, 4)))
        cert = certify_exit_time(fam, b, tol=1e-12)
        assert cert.feasible
        inner = b.interior
        for j in range(100):
            alpha = rng.integers(0, len(fam), n)
            x0 = int(rng.choice(inner))
            est = evaluate_policy_mc(fam, alpha, 1.0, 0.0, b, x0, 4000, seed=100 * i + j)
            worst_margin = max(worst_margin, est.mean - (cert.bound + 4 * est.stderr))
    infeasible = certify_exit_time(two_cycle_family(4), [0, 3]).status == "infeasible"
    el = time.perf_counter() - t0
    ok = worst_margin <= 0 and infeasible
    assert record(4, ok, f"max (E tau - bound - 4 se) = {worst_margin:.2f} over 1000 policies; "
                         f"2-cycle infeasible: {infeasible}", el, 60.0)


# 5 ---------------------------------------------------------------------------------

def test_criterion_5_dynkin():
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(20):
        n, b = _instance(rng, 3, 10)
        k = random_kernel(n, rng, b)
        w = rng.normal(size=n) * 3
        x0 = int(rng.choice(b.interior))
        est = verify_dynkin(k, w, b, x0, 10**5, seed=i)
        if est.stderr > 0:
            worst = max(worst, abs(est.mean) / est.stderr)
        elif abs(est.mean) > 1e-12 * (1 + np.abs(w).max()):
            # every sample took the same path; only rounding may remain
            worst = np.inf
    # deterministic kernel, integer test function: telescoping is exact
    shift = shift_kernel(8, +1)
    w = rng.integers(-20, 20, 8).astype(float)
    exact = bool(np.all(dynkin_defects(shift, w, [7], 0, 50, seed=0) == 0.0))
    el = time.perf_counter() - t0
    assert record(5, worst <= 4 and exact,
                  f"max |defect| / stderr = {worst:.2f} over 20 pairs; deterministic defect exactly 0: {exact}",
                  el, 30.0)


# 6 ---------------------------------------------------------------------------------

def _builtins(rng):
    n = 6
    b = random_boundary(n, rng)
    g = random_digraph(n, rng, b, density=0.5)
    fam = random_family(n, rng, b, 3)
    w = g.weights
    return [
        LinearGenerator(fam[0]), BellmanInf(fam), Extremal(fam, "minus"), Extremal(fam, "plus"),
        # H-form handles are I-form handles of -u, so only the I-forms carry the GCP
        Eikonal(g, "i"), PEikonal(g, 1.0, "i"), PEikonal(g, 2.0, "i"), PEikonal(g, 3.0, "i"),
        MonotoneDifferenceOperator(MonotoneProfile(lambda t: t**3), g),
        MonotoneDifferenceOperator(MonotoneProfile(lambda t: 1.5 * t + 0.4 * np.sin(t), bounds=(1, 2)), g),
        PucciJMinus(g, 0.5, 2.0),
        wrap_hamiltonian(lambda p, s, x: np.max(w[:, x] * p), n),
    ]


def test_criterion_6_gcp_suites():
    rng = np.random.default_rng(6)
    ops = _builtins(rng)
    t0 = time.perf_counter()
    failures = [type(op).__name__ for op in ops
                if not (check_gcp(op, 1000, seed=6).passed and check_constant_monotonicity(op, 1000, seed=6).passed)]
    planted = LinearOperator(np.array([[0, 1.0, 0], [-1.0, 0, 1.0], [0, 1.0, 0]]))
    rep = check_gcp(planted, 1000, seed=6)
    planted_found = False
    if rep.witness is not None:
        # the witness must reproduce the violation
        u, v, x = np.array(rep.witness["u"]), np.array(rep.witness["v"]), rep.witness["x"]
        planted_found = not rep.passed and planted(u, x) > planted(v, x)
    drep = check_differences_monotone(lambda p, s, x: -p[0], 6, 1000, seed=6)
    h_found = (not drep.passed) and drep.witness is not None
    el = time.perf_counter() - t0
    ok = not failures and planted_found and h_found
    assert record(6, ok, f"{len(ops) - len(failures)}/{len(ops)} built-ins pass; planted operator caught: "
                         f"{planted_found}; H = -p1 caught: {h_found}", el, 5.0)


# 7 ---------------------------------------------------------------------------------

def test_criterion_7_comparison():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = -np.inf
    for _ in range(20):
        n, b = _instance(rng, 2, 20)
        g = random_digraph(n, rng, b)
        fv = rng.uniform(0.1, 2, n)
        fu = fv + rng.uniform(0, 1, n)
        u = solve_eikonal(g, fu, rng.normal(size=n), b, form="i").solution
        v = solve_eikonal(g, fv, rng.normal(size=n), b, form="i").solution
        worst = max(worst, check_comparison_conclusion(u, v, b).worst_violation)
    for _ in range(20):
        n, b = _instance(rng, 3, 10)
        k = random_kernel(n, rng, b)
        fu = rng.normal(size=n)
        fv = fu + rng.uniform(0, 1, n)
        u = solve_linear_exit(k, fu, rng.normal(size=n), b).solution
        v = solve_linear_exit(k, fv, rng.normal(size=n), b).solution
        worst = max(worst, check_comparison_conclusion(u, v, b).worst_violation)
    el = time.perf_counter() - t0
    assert record(7, worst <= 1e-9, f"max excess {worst:.1e} over 40 ordered pairs", el, 5.0)


# 8 ---------------------------------------------------------------------------------

def test_criterion_8_peikonal_structure():
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    lemma_gap, pairs, bad = np.inf, 0, []
    for p in (1.5, 2.0, 3.0):
        for i in range(20):
            n, b = _instance(rng, 2, 8)
            g = random_digraph(n, rng, b, density=0.5)
            d = path_distance(g, b, 1.0 / p)
            lemma_gap = min(lemma_gap, float(np.min(PEikonal(g, p, "h").apply(d)[b.interior] - 1.0 / p)))
            rep = check_convex_representation(g, p, trials=20, seed=i)
            pairs += rep.trials
            if not rep.passed:
                bad.append((p, i, rep.witness.get("check")))
    el = time.perf_counter() - t0
    ok = lemma_gap >= -1e-12 and not bad and pairs >= 1000
    assert record(8, ok, f"min H_p(d) - 1/p = {lemma_gap:.1e}; gradient/support failures {bad} "
                         f"over {pairs} sampled pairs", el, 20.0)


# 9 ---------------------------------------------------------------------------------

def test_criterion_9_peikonal_solver():
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n, b = _instance(rng, 2, 20)
        g = random_digraph(n, rng, b)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        f = rng.uniform(0.1, 2, n)
        rep = solve_peikonal(g, p, f, rng.normal(size=n), b)
        assert rep.converged
        res = PEikonal(g, p, "h").apply(rep.solution)[b.interior] - f[b.interior]
        worst = max(worst, float(np.abs(res).max()))
    closed = solve_peikonal(chain_graph(3), 2, 0.5, 0, Boundary((0,), 3)).solution
    closed_err = float(np.abs(closed - [0, 1, 2]).max())
    el = time.perf_counter() - t0
    assert record(9, worst <= 1e-10 and closed_err <= 1e-10,
                  f"max residual {worst:.1e} over 20 instances; 3-chain error {closed_err:.1e}", el, 10.0)


# 10 --------------------------------------------------------------------------------

def test_criterion_10_perron():
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    worst, monotone = 0.0, True
    for kind in ("linear", "bellman", "eikonal", "peikonal"):
        for _ in range(5):
            n, b = _instance(rng, 3, 7)
            g = rng.uniform(-1, 1, n)
            if kind == "linear":
                k = random_kernel(n, rng, b)
                f = rng.uniform(0.1, 1, n)
                op, rhs, ref = LinearGenerator(k), -f, solve_linear_exit(k, f, g, b).solution
            elif kind == "bellman":
                fam = random_family(n, rng, b, 2)
                f = rng.uniform(0.1, 1, n)
                op, rhs = BellmanInf(fam), -f
                ref = value_iteration_bellman(fam, f, g, b, tol=1e-13).solution
            elif kind == "eikonal":
                graph = random_digraph(n, rng, b)
                rhs = rng.uniform(0.5, 2, n)
                op, ref = Eikonal(graph, "i"), solve_eikonal(graph, rhs, g, b, form="i").solution
            else:
                graph = random_digraph(n, rng, b)
                rhs = rng.uniform(0.5, 2, n)
                p = float(rng.choice([1.5, 2.0, 3.0]))
                op = PEikonal(graph, p, "i")
                ref = solve_peikonal(graph, p, rhs, g, b, form="i", tol=1e-13).solution
            start = default_subsolution(op, rhs, g, b)
            hist = []
            rep = perron_gauss_seidel(op, rhs, g, b, start, tol=1e-12, history=hist)
            assert rep.converged
            seq = [np.where(b.mask, g, start)] + hist
            monotone &= all(np.all(later >= earlier) for earlier, later in zip(seq, seq[1:]))
            worst = max(worst, float(np.abs(rep.solution - ref).max()))
    el = time.perf_counter() - t0
    assert record(10, worst <= 1e-8 and monotone,
                  f"max |perron - specialised| = {worst:.1e} over 20 instances; monotone sweeps: {monotone}",
                  el, 20.0)


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
