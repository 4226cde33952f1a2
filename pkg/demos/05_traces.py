"""Trace forms: watch the process only on the closed invariant set.

Restricting to the union of intervals turns the gaps into jump terms.
Two quadratic forms compete on the restricted function: the one the
Brownian trace induces and the one the extension induces, and whether
they agree decides which process a trace function belongs to.
"""

import math

from bmext import (
    TraceKind,
    cantor_eval,
    harmonic_extension,
    preset,
    trace_energy_bm,
    trace_energy_ext,
    trace_membership,
    trace_restriction,
)

# ex218 keeps the Cantor-gap closure at depth d; the identity restricted
# to it has Brownian trace energy (1 - (2/3)^d) / 2, approaching the
# free value 1/2 as the dust thins out.
print("identity restricted to deeper and deeper gap closures")
for depth in (2, 5, 8, 11):
    cfg = preset("ex218", depth=depth)
    tf = trace_restriction(cfg, lambda x: x, depth=depth)
    got = trace_energy_bm(cfg, tf)
    exact = 0.5 * (1.0 - (2.0 / 3.0) ** depth)
    print(f"  depth {depth:2d}: energy {got:.12f}   exact {exact:.12f}")

# The Cantor function is constant on every gap, so its jumps vanish and
# its Brownian trace energy is zero.  Its extension energy stays 1/2:
# the staircase slope survives the restriction.
cfg = preset("ex215")
tf = trace_restriction(cfg, cantor_eval, depth=8, densities=(1.0,))
print("\nCantor function restricted to ex215's block")
print(f"  brownian trace energy:  {trace_energy_bm(cfg, tf):.6f}")
print(f"  extension trace energy: {trace_energy_ext(cfg, tf):.6f}")

# Membership verdicts on a window around the unit block.
report = trace_membership(cfg, tf, (-0.5, 1.5))
print(f"  verdict: {report.kind.value}   ({report.note})")

cfg = preset("ex218", depth=6)
tf = trace_restriction(cfg, lambda x: x, depth=6)
report = trace_membership(cfg, tf, (-0.5, 1.5))
print("\nidentity on the gap closure")
print(f"  verdict: {report.kind.value}   deficit {report.deficit:.3e}")

# Harmonic extension fills every gap with the linear interpolant, the
# cheapest Brownian bridge between the boundary values.
ext = harmonic_extension(cfg, tf)
for x in (1 / 3, 0.5, 2 / 3):
    print(f"  extended value at {x:.4f}: {ext.eval(x):.12f}")
assert math.isclose(ext.eval(0.5), 0.5, rel_tol=1e-12)
