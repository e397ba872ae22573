import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphhjb import (
    BellmanInf, Eikonal, Extremal, LinearGenerator, MonotoneDifferenceOperator, MonotoneProfile, PEikonal,
    PucciJMinus, ValidationError, check_comparison_conclusion, check_constant_monotonicity,
    check_convex_representation, check_differences_monotone, check_gcp, check_max_subsolution,
    hamiltonian_of, solve_eikonal, solve_linear_exit, wrap_hamiltonian,
)
from graphhjb.generators import (
    chain_graph, random_boundary, random_digraph, random_family, walk_kernel,
)
from graphhjb.operators import LinearOperator, Operator
from graphhjb.verification import (
    check_positive_perturbation, check_strict_perturbation, estimate_lipschitz,
)


def builtin_operators(seed=0, n=6):
    rng = np.random.default_rng(seed)
    b = random_boundary(n, rng)
    g = random_digraph(n, rng, b, density=0.5)
    fam = random_family(n, rng, b, 3)
    return [
        LinearGenerator(fam[0]), BellmanInf(fam), Extremal(fam, "minus"), Extremal(fam, "plus"),
        Eikonal(g, "i"), PEikonal(g, 1.0, "i"), PEikonal(g, 2.5, "i"),
        MonotoneDifferenceOperator(MonotoneProfile(lambda t: t**3), g), PucciJMinus(g, 0.5, 2.0),
        wrap_hamiltonian(lambda p, s, x: np.max(g.weights[:, x] * p) + 0.1 * s, n),
    ]


class Identity(Operator):
    n = 3

    def _eval(self, u, x):
        return float(u[x])


def test_builtins_pass_gcp_and_constant():
    for op in builtin_operators():
        assert check_gcp(op, 300, seed=1).passed, op
        assert check_constant_monotonicity(op, 300, seed=1).passed, op


def test_gcp_detects_negative_coefficient():
    a = np.array([[0, 1.0, 0], [-1.0, 0, 1.0], [0, 1.0, 0]])
    rep = check_gcp(LinearOperator(a), 200, seed=0)
    assert not rep.passed
    w = rep.witness
    op = LinearOperator(a)
    u, v = np.array(w["u"]), np.array(w["v"])
    assert np.all(u <= v) and u[w["x"]] == v[w["x"]]
    assert op(u, w["x"]) > op(v, w["x"])
    # the bump at the negative entry is the canonical counterexample
    v = np.zeros(3)
    u = v - np.array([1.0, 0, 0])
    assert op(u, 1) > op(v, 1)


def test_gcp_equal_pair_has_zero_violation(walk3):
    op = LinearGenerator(walk3)
    u = np.array([0.5, 1.5, -1.0])
    assert op(u, 1) - op(u, 1) == 0


def test_h_forms_are_anti_monotone(chain3):
    # H(u) = I(-u): the comparison property holds for the I-forms only
    assert not check_gcp(Eikonal(chain3, "h"), 200, seed=0).passed
    assert not check_gcp(PEikonal(chain3, 2, "h"), 200, seed=0).passed
    assert check_constant_monotonicity(Eikonal(chain3, "h"), 200, seed=0).passed


def test_constant_monotonicity_detects_identity():
    rep = check_constant_monotonicity(Identity(), 50, seed=0)
    assert not rep.passed and rep.worst_violation > 0


def test_differences_monotone():
    w = np.array([0.5, 2.0, 1.0, 0.0])
    assert check_differences_monotone(lambda p, s, x: np.max(w * p), 4, 500, seed=0).passed
    rep = check_differences_monotone(lambda p, s, x: -p[0], 4, 500, seed=0)
    assert not rep.passed
    wit = rep.witness
    assert -wit["p"][0] > -wit["q"][0]
    for op in builtin_operators(seed=3):
        assert check_differences_monotone(hamiltonian_of(op), op.n, 200, seed=2).passed


def test_comparison_examples(chain3):
    u = np.array([0.0, 1.0, 2.0])
    assert check_comparison_conclusion(u, u, [0]).passed
    two = solve_eikonal(chain3, 2, 0, [0], form="i").solution
    one = solve_eikonal(chain3, 1, 0, [0], form="i").solution
    assert check_comparison_conclusion(two, one, [0]).passed
    bumped = u + np.array([0, 0.5, 0])
    rep = check_comparison_conclusion(bumped, u, [0])
    assert not rep.passed and rep.witness["x"] == 1


def test_max_subsolution_examples(walk3):
    k = walk_kernel(6)
    op = LinearGenerator(k)
    f = -np.ones(6)
    b = [0, 5]
    sol = solve_linear_exit(k, 1, 0, b).solution
    # cheaper running cost on disjoint sets gives lower subsolutions
    u1 = solve_linear_exit(k, 1 - 0.5 * np.isin(np.arange(6), [1, 2]), 0, b).solution
    u2 = solve_linear_exit(k, 1 - 0.7 * np.isin(np.arange(6), [3, 4]), -0.2, b).solution
    assert np.all(u1 <= sol) and np.any(u1 > u2) and np.any(u2 > u1)
    assert check_max_subsolution(op, u1, u2, f, b).passed
    assert check_max_subsolution(op, sol, sol - 1.0, f, b).passed
    assert check_max_subsolution(op, sol, sol, f, b).passed
    with pytest.raises(ValidationError, match="u2 is not a subsolution at vertex 1"):
        check_max_subsolution(op, sol, sol + np.array([0, 1.0, 0, 0, 0, 0]), f, b)


@given(st.integers(0, 10**6))
def test_max_of_random_subsolutions(seed):
    rng = np.random.default_rng(seed)
    n = 6
    b = random_boundary(n, rng)
    g = random_digraph(n, rng, b)
    op = PEikonal(g, 2.0, "i")
    f = np.full(n, 0.5)
    sol = solve_eikonal(g, 1.0, 0, b, form="i").solution
    # scaled solutions of the eikonal problem are p-eikonal subsolutions for large enough scale
    u1 = 2.0 * sol
    u2 = 2.0 * sol - rng.uniform(0, 1, n)
    if np.all(op.apply(u1)[b.interior] >= 0.5) and np.all(op.apply(u2)[b.interior] >= 0.5):
        assert check_max_subsolution(op, u1, u2, f, b).passed


def test_convex_examples(chain3):
    op = PEikonal(chain3, 2, "i")
    u = np.array([0.0, 1.0, 2.0])
    v = np.zeros(3)
    for x in range(3):
        grad = op.gradient(v, x)
        assert op(u, x) >= op(v, x) + grad @ (u - v)
        gu = op.gradient(u, x)
        assert op(u, x) - (op(u, x) + gu @ (u - u)) == 0
    rep = check_convex_representation(chain3, 2, trials=20, seed=0, keep_certificates=True)
    assert rep.passed
    assert all(c.support_gap >= -1e-10 for c in rep.certificates)
    # Euler's relation for a 2-homogeneous function: grad.v - phi(v) = phi(v)
    v = np.array([3.0, 1.0, 0.5])
    assert op.gradient(v, 1) @ v - op(v, 1) == pytest.approx(op(v, 1), rel=1e-14)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_convex_random(p):
    rng = np.random.default_rng(int(p * 10))
    n = 6
    b = random_boundary(n, rng)
    g = random_digraph(n, rng, b, density=0.5)
    rep = check_convex_representation(g, p, trials=200, seed=1)
    assert rep.passed, rep.witness


def test_gradient_closed_form_p2(chain3):
    # phi_x(u) = 1/2 sum_k w(k, x) ((u_k - u_x)_+)^2
    op = PEikonal(chain3, 2, "i")
    v = np.array([3.0, 1.0, 0.5])
    assert np.allclose(op.gradient(v, 1), [2.0, -2.0, 0.0])
    assert op.gradient(v, 1).sum() == 0


def test_convex_needs_p_above_one(chain3):
    with pytest.raises(ValidationError):
        check_convex_representation(chain3, 1.0, trials=1)


def test_perturbation_surrogates(walk3):
    b = [0, 2]
    for op in builtin_operators(seed=4)[:4]:
        assert check_positive_perturbation(op, [0], trials=50).passed
    op = PEikonal(chain_graph(4), 2, "i")
    u = -np.array([0.0, 1.0, 2.0, 3.0])
    assert check_strict_perturbation(op, u, [0], "homogeneous").passed
    a = np.array([[0, 1.0, 0], [0.5, 0, 0.5], [0, 1.0, 0]])
    proper = wrap_hamiltonian(lambda p, s, x: a[x] @ p + s, 3)
    assert check_strict_perturbation(proper, np.array([0.0, 1.0, 0.0]), b, "proper").passed
    assert not check_strict_perturbation(LinearGenerator(walk3), np.zeros(3), b, "proper").passed


def test_lipschitz_estimate_is_finite(walk3):
    c = estimate_lipschitz(LinearGenerator(walk3), radius=1.0, trials=100)
    assert 0 < c <= 2.0


def test_report_json():
    rep = check_gcp(LinearOperator(np.array([[0, 1.0], [-1.0, 0]])), 50, seed=0)
    d = json.loads(rep.to_json())
    assert set(d) == {"passed", "trials", "worst_violation", "witness"}
    assert d["passed"] is False
