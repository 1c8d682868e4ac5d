"""
Trivalent graphs and their cocycles
===================================

Graphs are stored with numbered vertices and oriented edges.  The
coboundary contracts one edge at a time, and its kernel modulo relabelings
gives the graph cocycles that feed the configuration space integrals.
"""

from configint.checks import K4, THETA
from configint.graphs import (canonical_key, cocycle_basis, contract_edge, delta,
                              enumerate_trivalent, order)

###############################################################################
# How many trivalent graphs there are for small vertex counts.

for variant in ("closed", "knot"):
    for n in (2, 4, 6):
        print(f"{variant:6s} n={n}: {len(enumerate_trivalent(n, variant)):4d} graphs")

###############################################################################
# Contracting any edge of the theta graph leaves the other two edges as
# loops at the merged vertex, and graphs with loops count as zero.

print("theta:", THETA, " order", order(THETA))
print("contractions:", [contract_edge(THETA, k).is_zero for k in range(3)])
print("delta(theta) == 0:", not delta(THETA))

###############################################################################
# Contracting an edge of K4 gives a three-vertex graph with a sign.

sg = contract_edge(K4, 0)
print("K4 edge 0 ->", sg.sign, sg.graph)

###############################################################################
# Applying the coboundary twice always gives zero.

graphs = enumerate_trivalent(6, "closed")
print("delta^2 = 0 on all closed n=6 graphs:", all(not delta(delta(g)) for g in graphs))

###############################################################################
# The only connected closed cocycle on two vertices is theta.  For knots the
# prime order-two cocycle mixes the crossed chord diagram with a tripod and
# a graph with two internal vertices.

print("closed n=2:", cocycle_basis(2, "closed", "connected"))
(v,) = cocycle_basis(4, "knot", "prime")
for g, c in v.items():
    print(f"  {str(c):>5s}  {canonical_key(g)}")
