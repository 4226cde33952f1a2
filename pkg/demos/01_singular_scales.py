"""Singular scale functions from the ground up.

A scale here is strictly increasing and continuous, but its derivative
hides mass in Cantor sets: off those sets it grows like x, on them it
jumps through a devil's staircase.  Excluded finite endpoints get an
infinite stack of staircases so the scale diverges there, which is what
keeps a diffusion from ever reaching such an endpoint.
"""

import math
from fractions import Fraction

from bmext import cantor_eval, cantor_fraction, make_scale

# The staircase itself: exact rational arithmetic when you need it,
# floats when you don't.  float(1/3) is not 1/3, and the staircase is
# only Hölder continuous, so the float path lands ~2.5e-11 off at
# triadic points while the Fraction path is exact.
print("Cantor function values")
for x in (Fraction(1, 3), Fraction(1, 4), Fraction(3, 4)):
    print(f"  C({x}) = {cantor_fraction(x)}   (float path: {cantor_eval(float(x)):.15f})")

# A scale on the whole line with one unit-weight staircase block on [0, 1]:
# t(x) = x + C(x) there, plain x elsewhere.  The anchor e = 0 pins t(e) = 0.
line = make_scale(-math.inf, math.inf, blocks=[(0, 1, 1)])
print("\nunit-block line scale")
print(f"  anchor e = {line.e}, t(e) = {line.eval(line.e)}")
print(f"  t(1/3) = {line.eval(1/3):.15f}   (= 1/3 + 1/2)")
print(f"  t(1)   = {line.eval(1.0)}        (= 1 + full staircase)")

# A bounded interval with an excluded right endpoint: the scale must blow
# up there, and it does, through a stack of shrinking unit-weight blocks.
half_open = make_scale(0.0, 1.0, include_lo=True, include_hi=False)
print("\nhalf-open [0, 1): the right endpoint is walled off")
for x in (0.5, 0.9, 0.99, 0.999, 1.0):
    print(f"  t({x}) = {half_open.eval(x)}")

# Singular mass between two points: the Stieltjes measure of the scale's
# staircase part.  Between 0 and 1/3 the unit block carries exactly 1/2.
print("\nstaircase mass on the unit block")
print(f"  W([0, 1/3]) = {line.singular_between(0.0, 1/3)}")
print(f"  W([0, 1])   = {line.singular_between(0.0, 1.0)}")
