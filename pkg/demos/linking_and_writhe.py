"""
Linking numbers and self-linking of closed curves
==================================================

The Gauss double integral counts how often two closed curves wind around
each other.  Applied to a single knot it measures the average writhe.
"""

import numpy as np

from configint.curves import builtin_knot, circle, hopf_pair, torus_link_pair
from configint.integrate import linking_number, self_linking
from configint.oracles import crossing_linking, writhe_oracle

###############################################################################
# Two round circles, each passing through the other's disc.

a, b = hopf_pair()
lk = linking_number(a, b)
print(f"Hopf link:   {lk.value:+.9f}  (quadrature error {lk.std_error:.1e})")
print(f"  counted from a projection: {crossing_linking(a, b):+d}")

###############################################################################
# The (2,4) torus link winds twice.  Far-apart circles do not link at all.

ta, tb = torus_link_pair()
print(f"torus link:  {linking_number(ta, tb).value:+.9f}")
print(f"far circles: {linking_number(circle(), circle(center=(10, 0, 0))).value:+.1e}")

###############################################################################
# For one curve the same kernel integrated over pairs of its own points gives
# the self-linking number.  It is not an isotopy invariant but it equals the
# writhe averaged over all projection directions.

trefoil = builtin_knot("trefoil")
sln = self_linking(trefoil)
writhe = writhe_oracle(trefoil, 2000, seed=1)
print(f"trefoil sln: {sln.value:+.6f}")
print(f"mean writhe: {writhe.value:+.4f} +- {writhe.std_error:.4f}")
print(f"planar circle sln: {self_linking(circle()).value:+.1e}")

###############################################################################
# Reflecting through the xy-plane flips the sign.

mirror = trefoil.transformed(np.diag([1.0, 1.0, -1.0]))
print(f"mirror sln:  {self_linking(mirror).value:+.6f}")
print("agree:", np.isclose(self_linking(mirror).value, -sln.value))
