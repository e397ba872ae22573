"""Path distance on a small digraph and the eikonal equation it solves.

Run: python3 demos/01_distance_and_eikonal.py
"""
import numpy as np

from graphhjb import Eikonal, Graph, path_distance, solve_eikonal

# a 5-vertex digraph; weights[x, y] is the weight of the edge x -> y
w = np.zeros((5, 5))
w[0, 1] = 1.0
w[1, 2] = 0.5   # a weak edge: crossing it costs 1 / 0.5 = 2
w[0, 3] = 0.25
w[3, 2] = 2.0
w[2, 4] = 1.0
w[1, 0] = w[2, 1] = w[4, 2] = 1.0
graph = Graph(w)
boundary = [0]

d = path_distance(graph, boundary)
print("distance to x1:", d)

# the distance is the solution of H_e(u) = 1 with u = 0 on the boundary
rep = solve_eikonal(graph, 1.0, 0.0, boundary, form="h")
print("eikonal solve: ", rep.solution, rep.status)
print("H_e(d) inside: ", Eikonal(graph, "h").apply(d)[1:])

# larger speed f makes every step dearer
rep = solve_eikonal(graph, [1, 1, 3, 1, 1], 0.0, boundary, form="h")
print("with f(x3) = 3:", rep.solution)

# comparison-form convention: the I-form solution is the negated H-form one
rep_i = solve_eikonal(graph, 1.0, 0.0, boundary, form="i")
print("I-form:        ", rep_i.solution)
