"""Five users, three groups: the move-delta digraph and what its cycles mean."""

import numpy as np

from nomagroup.graph import apply_cycle, build_graph, cycle_weight, extend_with_virtuals
from nomagroup.power import Grouping, total_power
from nomagroup.scenario import generate_scenario
from nomagroup.solvers import enumerate_cycles

s = generate_scenario(5, 3, seed=11)
g = Grouping((0, 0, 1, 1, 2), 3)
eg = extend_with_virtuals(g, s)
print("nodes:", eg.n_nodes, " groups of nodes:", eg.pi)  # nodes 5, 6, 7 are virtual

graph = build_graph(eg, s)
np.set_printoptions(precision=3, linewidth=120)
print("edge weights (W, inf = same group):")
print(graph.weights)

# every cycle's weight is the exact change of total power when it is applied
P = total_power(g, s)
best = None
for c in enumerate_cycles(eg):
    w = cycle_weight(c, graph)
    dP = total_power(apply_cycle(c, eg).base, s) - P
    if best is None or w < best[1]:
        best = (c, w, dP)
c, w, dP = best
print(f"lightest cycle {c}: weight {w:.6g} W, recomputed change {dP:.6g} W")

# a cycle through a virtual user shifts a member instead of swapping
v = eg.virtual_of(2)
print("shift 0 -> group 2:", apply_cycle((0, v), eg).base.assignment)
