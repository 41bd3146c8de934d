"""A first tour of exponential coordinates on the Heisenberg group.

Multiplying e^X e^Y picks up a commutator correction in the center, and
a unit square traced with horizontal moves fails to close by exactly
e^Z.  Everything here is exact (the BCH series is finite).
"""

import numpy as np

from carnot import catalog
from carnot.group import CarnotGroup, dilate

algebra = catalog.heisenberg()
g = CarnotGroup(algebra)
X = algebra.from_label("X")
Y = algebra.from_label("Y")
Z = algebra.from_label("Z")

print("group:", algebra.name, "layers:", algebra.layer_dims)
print()

xy = g.bch(X, Y)
yx = g.bch(Y, X)
print("e^X e^Y  ->", xy, " (note the +1/2 in the Z slot)")
print("e^Y e^X  ->", yx)
print("commutator of the two products:", g.difference(yx, xy))
print()

# walk a unit square: right, up, left, down
square = g.bch_many([X, Y, -X, -Y])
print("unit square loop ends at", square, "= e^Z, the enclosed area")
print()

# dilations stretch layer i by t^i, and respect the product
t = 3.0
lhs = dilate(algebra, t, g.bch(X, Y))
rhs = g.bch(dilate(algebra, t, X), dilate(algebra, t, Y))
print(f"h_{t}(xy) - h_{t}(x) h_{t}(y) =", lhs - rhs)

assert np.allclose(square, Z)
assert np.allclose(lhs, rhs)
