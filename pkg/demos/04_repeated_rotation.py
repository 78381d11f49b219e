"""
Error growth under repeated rotation
====================================

Rotating a point many times by the same float constants changes its radius.
Arbitrary angles drift linearly, commensurate angles can fall into an exact
cycle, and good angles only show the random walk of the other roundoffs.
"""
from goodrot.drift import RotationSpec, classify_regime, detect_cycle, iterate_rotation
from goodrot.family import generate_family
from goodrot.scan import nearest_entry

steps = 10**6

arbitrary = RotationSpec.dyadic(300)
good = RotationSpec.from_grid(nearest_entry(generate_family(51, 53).entries, 0.1, "at_least").point)

for name, spec in (("j/512, j=300", arbitrary), ("good n=51", good)):
    series = iterate_rotation(spec, steps=steps)
    rep = classify_regime(series)
    print(f"{name:14s} mean err at {steps}: {series.mean[-1]:.2e}  exponent {rep.loglog_slope:.2f}  {rep.regime}")

# j pi / 2000 with j = 250 is 2 pi / 16
print("cycle (period, start):", detect_cycle(RotationSpec.pi_fraction(250), 0.6, 0.8))

# single precision makes the same story visible much sooner
series = iterate_rotation(RotationSpec.dyadic(300, precision="single"), steps=10**4)
print("single precision after 1e4 steps:", series.mean[-1])
