import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphhjb import (
    KernelFamily, ValidationError, estimate_exit_functional, evaluate_policy_mc, sample_path,
    solve_linear_exit, verify_dynkin,
)
from graphhjb.generators import left_right_family, random_boundary, random_kernel, shift_kernel, walk_kernel
from graphhjb.stochastic import MCEstimate, dynkin_defects


def test_sample_path_examples(walk3):
    t = sample_path(walk3, 0, [0, 2], seed=1)
    assert t.exit_time == 0 and t.states == (0,) and not t.censored
    t = sample_path(shift_kernel(5, +1), 1, [4], seed=1)
    assert t.exit_time == 3 and t.states == (1, 2, 3, 4)
    for seed in range(20):
        assert sample_path(walk3, 1, [0, 2], seed=seed).exit_time == 1


def test_sample_path_censoring():
    # the walk on x2..x4 never reaches x1 from x3 without passing x2; cap the steps
    t = sample_path(walk_kernel(40), 20, [0], seed=3, max_steps=5)
    assert t.censored and t.exit_time == 5 and len(t.states) == 6
    with pytest.raises(ValidationError):
        sample_path(walk_kernel(3), 1, [0], seed=0, max_steps=0)


@given(st.integers(0, 2**63), st.integers(0, 50))
def test_paths_follow_kernel_and_reproduce(seed, sample):
    rng = np.random.default_rng(seed % 2**32)
    n = 6
    b = random_boundary(n, rng)
    k = random_kernel(n, rng, b)
    x0 = int(b.interior[0])
    t1 = sample_path(k, x0, b, seed, sample=sample)
    t2 = sample_path(k, x0, b, seed, sample=sample)
    assert t1 == t2
    for a, c in zip(t1.states, t1.states[1:]):
        assert k.matrix[a, c] > 0
    assert t1.censored or t1.states[-1] in b


def test_estimate_examples(walk3):
    est = estimate_exit_functional(walk3, 1, [7.5, 0, 0], [0, 2], 0, 100, seed=0)
    assert est.mean == 7.5 and est.stderr == 0
    est = estimate_exit_functional(walk3, 1, 0, [0, 2], 1, 1000, seed=0)
    assert est.mean == 1.0 and est.stderr == 0
    est = estimate_exit_functional(walk_kernel(5), 1, 0, [0, 4], 2, 10**5, seed=11)
    assert est.within(4.0)
    assert est.censored == 0


def test_batch_matches_single_paths():
    # each batch sample is the path sample_path would produce for that index
    k = walk_kernel(6)
    est = estimate_exit_functional(k, 1, 0, [0, 5], 2, 50, seed=9)
    times = [sample_path(k, 2, [0, 5], 9, sample=i).exit_time for i in range(50)]
    assert est.mean == pytest.approx(np.mean(times), abs=1e-12)


def test_workers_do_not_change_estimate():
    k = walk_kernel(7)
    a = estimate_exit_functional(k, 1, 0, [0, 6], 3, 5000, seed=4)
    b = estimate_exit_functional(k, 1, 0, [0, 6], 3, 5000, seed=4, workers=4)
    assert a == b


def test_censoring_is_reported():
    est = estimate_exit_functional(walk_kernel(30), 1, 0, [0], 29, 200, seed=0, max_steps=10)
    assert est.censored == 200
    assert "censored" in est.warning
    assert np.isnan(est.mean)


def test_estimate_json():
    est = MCEstimate(1.5, 0.25, 10, 0)
    assert json.loads(est.to_json()) == {"mean": 1.5, "stderr": 0.25, "samples": 10, "censored": 0}


def test_dynkin_examples(walk3):
    w = np.array([1.0, 5.0, -2.0])
    assert verify_dynkin(walk3, w, [0, 2], 0, 10, seed=0).mean == 0.0
    k = shift_kernel(6, +1)
    w = np.array([3.0, -1.0, 4.0, 1.0, -5.0, 9.0])
    d = dynkin_defects(k, w, [5], 0, 100, seed=0)
    assert np.all(d == 0.0)
    est = verify_dynkin(walk_kernel(5), np.array([0.3, -1.0, 2.0, 0.5, 1.0]), [0, 4], 2, 10**5, seed=2)
    assert abs(est.mean) <= 4 * est.stderr


def test_policy_mc_examples(walk3):
    fam = KernelFamily([walk3])
    a = evaluate_policy_mc(fam, [0, 0, 0], 1, 0, [0, 2], 1, 100, seed=5)
    b = estimate_exit_functional(walk3, 1, 0, [0, 2], 1, 100, seed=5)
    assert a == b
    est = evaluate_policy_mc(left_right_family(5), [0, 0, 0, 1, 0], 1, 0, [0, 4], 2, 1000, seed=0)
    assert est.mean == 2.0 and est.stderr == 0


def test_policy_mc_matches_linear_solve():
    rng = np.random.default_rng(8)
    n = 6
    b = random_boundary(n, rng)
    k0, k1 = random_kernel(n, rng, b), random_kernel(n, rng, b)
    fam = KernelFamily([k0, k1])
    alpha = rng.integers(0, 2, n)
    kern = fam.matrices[alpha, np.arange(n)]
    x0 = int(b.interior[0])
    exact = solve_linear_exit(kern, 1, 0, b).solution[x0]
    est = evaluate_policy_mc(fam, alpha, 1, 0, b, x0, 20000, seed=1)
    assert est.within(exact)


def test_validation(walk3):
    with pytest.raises(ValidationError):
        estimate_exit_functional(walk3, 1, 0, [0, 2], 1, 0, seed=0)
    with pytest.raises(ValidationError):
        estimate_exit_functional(walk3, 1, 0, [0, 2], 7, 10, seed=0)
