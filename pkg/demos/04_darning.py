"""Darning: collapse an interval's singular set to a quotient space.

The staircase-supporting set inside one interval gets sewn together by
pushing the process through its scale.  What comes out is a measure on
the darned image: exact rational atoms where staircase blocks collapse
plus a residue term for any boundary stacks.  A companion check
confirms the darned process carries the same energy as the original.
"""

from bmext import darn, energy_equivalence_check, named_function, preset

cfg = preset("ex215")

# Darn the unit block out of the line.  The whole block collapses to a
# single point and carries its staircase mass, split across the dyadic
# enumeration depth.
for depth in (4, 8, 12):
    spec = darn(cfg, 0, depth=depth)
    print(f"depth {depth:2d}: {len(spec.atoms)} atoms, total mass = {spec.total_mass()}")

spec = darn(cfg, 0, depth=8)
print("\nlargest atoms in the darned image")
for loc, mass in sorted(spec.atoms, key=lambda a: -a[1])[:5]:
    print(f"  y = {loc:<22} mass = {mass}")

# The midpoint of the image inherits the middle-third gap: exactly 1/3
# of the mass, as a Fraction, not a float that happens to be close.
print(f"\natom at 0.5: {spec.atom_mass(0.5)}")

# Energy is preserved through the darning map.  The check transports a
# zero-Brownian-energy function both ways and reports the gap.
c = named_function(cfg, "cantor")
source, image, gap = energy_equivalence_check(cfg, 0, c, depth=20)
print(f"energy through the darning map: {source} -> {image}  (gap {gap:.3e})")

# Slow reflection at the image boundary: darning the stacked ray of the
# darning-sojourn preset piles unit mass onto the kept endpoint, so the
# darned process reflects there with a sojourn.
soj = darn(preset("darning-sojourn"), 1, depth=8)
print("\ndarning the stacked ray of the darning-sojourn preset")
print(f"  image window starts at {soj.image_lo}, boundary included: {soj.include_lo}")
print(f"  atom at the boundary: {soj.atom_mass(0.0)}")
print(f"  slow reflection (lo, hi): {soj.slow_reflection()}")
