"""Linear exit problems and their Monte Carlo representation.

The expected running cost plus exit value of a Markov chain solves a linear
equation for the chain's generator. Both sides are computed here.

Run: python3 demos/02_markov_exit_costs.py
"""
import numpy as np

from graphhjb import estimate_exit_functional, solve_linear_exit, verify_dynkin
from graphhjb.generators import walk_kernel

n = 7
kernel = walk_kernel(n)          # symmetric walk on a path
boundary = [0, n - 1]

# expected exit time: running cost 1, exit value 0
rep = solve_linear_exit(kernel, 1.0, 0.0, boundary)
print("E tau (exact):", rep.solution)          # x (n - 1 - x)

for x0 in (1, 3):
    est = estimate_exit_functional(kernel, 1.0, 0.0, boundary, x0, samples=20000, seed=1)
    print(f"E tau from x{x0 + 1} (MC): {est.mean:.3f} +- {est.stderr:.3f}")

# harmonic interpolation of boundary values
g = np.zeros(n)
g[-1] = 1.0
print("P(exit right):", solve_linear_exit(kernel, 0.0, g, boundary).solution)

# Dynkin's formula: the defect should be zero within the error bar
w = np.arange(n, dtype=float) ** 2
est = verify_dynkin(kernel, w, boundary, 3, samples=20000, seed=2)
print(f"Dynkin defect: {est.mean:.4f} +- {est.stderr:.4f}")
