"""
Good rotation angles in single precision
========================================

Every pair of 24 bit integers (x, y) with x**2 + y**2 close to 2**48 gives
constants c = x / 2**24, s = y / 2**24 that are stored without rounding and
sit almost exactly on the unit circle.
"""
import math
from fractions import Fraction

import numpy as np

from goodrot import defect, emit_constants, nearest_good_angle, scan, to_sin_cos

# all octant points with |k| <= 32, sorted by angle
table = scan(24, 32)
print(len(table), "points")
for e in table.entries[:5]:
    print(f"{e.x:10d} {e.y:10d}  theta={e.theta:.8f}  k={e.k}")

# nearest angle to a target, with its exact integer defect
g, k = nearest_good_angle(24, 32, 0.485)
c, s = to_sin_cos(g, np.float32)
print("picked", g, "k =", k, "=", defect(g))

# exact c*c + s*s - 1 of the grid constants and of rounded cos/sin of 0.485
cf, sf = np.float32(math.cos(0.485)), np.float32(math.sin(0.485))
print("grid:    ", float(Fraction(float(c)) ** 2 + Fraction(float(s)) ** 2 - 1))
print("rounded: ", float(Fraction(float(cf)) ** 2 + Fraction(float(sf)) ** 2 - 1))

# constants ready to paste into source code
print(emit_constants(g, "generic"))
print(emit_constants(g, "hex"))

# a larger bound keeps many more angles
print(len(scan(24, 1000)), "points with |k| <= 1000")
