"""Bellman equations: value iteration, policy iteration and the exit-time certificate.

Run: python3 demos/03_optimal_control.py
"""
import numpy as np

from graphhjb import (
    certify_exit_time, enumerate_policies, evaluate_policy_mc, policy_iteration_bellman,
    value_iteration_bellman,
)
from graphhjb.generators import left_right_family, random_boundary, random_family, two_cycle_family

# go left or go right on a 5-chain; pay 1 per step until an end is reached
fam = left_right_family(5)
vi = value_iteration_bellman(fam, 1.0, 0.0, [0, 4])
pi = policy_iteration_bellman(fam, 1.0, 0.0, [0, 4])
print("value iteration: ", vi.solution, "after", vi.iterations, "sweeps")
print("policy iteration:", pi.solution, "policy", pi.policy)

# a random family where every control exits: compare with brute force
rng = np.random.default_rng(0)
b = random_boundary(6, rng)
fam = random_family(6, rng, b, 3)
best, count = enumerate_policies(fam, 1.0, 0.0, b)
print("VI vs enumeration:", np.abs(value_iteration_bellman(fam, 1.0, 0.0, b).solution - best).max(),
      f"({count} policies)")

# worst-case expected exit time and the uniform bound 2 ||phi||
cert = certify_exit_time(fam, b)
print("worst E tau:", cert.worst_expected_exit, "bound:", cert.bound)
x0 = int(b.interior[0])
est = evaluate_policy_mc(fam, rng.integers(0, 3, 6), 1.0, 0.0, b, x0, 5000, seed=3)
print(f"a random policy from x{x0 + 1}: {est.mean:.2f} <= {cert.bound:.2f}")

# a family that can cycle forever has no certificate
cert = certify_exit_time(two_cycle_family(4), [0, 3])
print("2-cycle family:", cert.status, "trapped vertices", cert.trapped)
