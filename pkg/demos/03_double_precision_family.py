"""
A catalog of good angles in double precision
============================================

A full scan at p = 53 is out of reach, but points on x**2 + y**2 = 2**102 + 1
shifted left by two bits have defect exactly 16 at p = 53.
"""
import numpy as np

from goodrot.family import emit_constants, generate_family, parse_constants
from goodrot.grid import to_sin_cos
from goodrot.scan import nearest_entry

cat = generate_family(51, 53)
print(len(cat), "angles in [0, pi/4], largest gap on the circle", round(cat.max_gap, 4))
print("factorization:", cat.factorization)

thetas = np.array([e.theta for e in cat])
print("spacing: min %.2e  median %.2e" % (np.diff(thetas).min(), np.median(np.diff(thetas))))

for target in (0.1, 0.3, 0.5, 0.7):
    e = nearest_entry(cat.entries, target, "at_least")
    print(f"theta >= {target}: {e.theta:.8f}  k={e.k}")

# emitted text parses back to exactly the same doubles
e = cat.entries[100]
text = emit_constants(e.point, "hex")
print(text)
assert parse_constants(text, "hex") == to_sin_cos(e.point)
