"""Dirichlet energy on an extended state space, and how it splits.

Functions in the extended space carry two slopes per interval: an
absolutely continuous rate u against dx and a singular rate w against
the staircase measure.  Energy integrates u^2 dx + w^2 dW, halved.
Purely singular functions cost nothing to Brownian motion, and the
space splits orthogonally into the classical H^1 part and that
zero-Brownian-energy complement.
"""

from bmext import compensator, energy, named_function, orthogonal_decompose, preset

cfg = preset("ex215")

# Built-in test functions on the unit-block line.
print("energies on ex215")
for name in ("identity", "cantor", "scale", "tent"):
    f = named_function(cfg, name)
    print(f"  {name:10s} {energy(cfg, f)}")

# identity has u = 1 everywhere: infinite energy on the line, which the
# table shows.  cantor costs 1/2 (its whole slope is singular), tent
# costs 1 from two unit slopes on [0, 1/2] and [1/2, 1].

# Splitting scale = identity + cantor recovers the parts exactly, and
# the cross term between them vanishes.
f = named_function(cfg, "scale")
smooth, complement = orthogonal_decompose(cfg, f)
print("\ndecomposition of the scale function t = x + C(x)")
print(f"  smooth part energy:     {energy(cfg, smooth)}")
print(f"  complement part energy: {energy(cfg, complement)}")
x = 0.7
print(f"  reassembled at {x}: {smooth.eval(x) + complement.eval(x):.15f}  vs  t({x}) = {f.eval(x):.15f}")

# Approximating an indicator of a trap point needs a compensator: a
# low-energy bump whose shape is dictated by the local geometry.  The
# returned certificate bounds its energy against the budget eps.
stacked = preset("ex216")
comp = compensator(
    "open-boundary",
    stacked.interval(1).scale,
    c=0.0,
    h=1.0,
    eps=0.01,
    n=1,
)
print("\nopen-boundary compensator at the trap point of ex216")
print(f"  energy bound: {comp.e1_bound:.6f}  budget: {comp.budget:.6f}  certified: {comp.certified()}")
print(f"  value at the boundary: {comp.eval(0.0)}  support: {comp.support}")

# The plateau variant flattens a bump across a staircase block; beta
# trades plateau width against the quadratic cost h^2 * beta.
plateau = compensator(
    "cantor-plateau",
    cfg.interval(0).scale,
    c=0.5,
    h=1.0,
    eps=0.01,
    n=1,
    beta=0.01 / 8,
)
print("cantor-plateau compensator across the unit block")
print(f"  energy bound: {plateau.e1_bound:.6f}  budget: {plateau.budget:.6f}  certified: {plateau.certified()}")
