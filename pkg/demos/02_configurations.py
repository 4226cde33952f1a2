"""Extension configurations: invariant intervals plus what they leave out.

A configuration lists the closed-in-themselves intervals where the
process lives, each with its own singular scale, and describes the
complement (trap points, dead segments, Cantor dust).  The validator
checks the pieces tile the line without overlap; the trace measure says
how the complement is weighted when the process is watched only there.
"""

from bmext import ExtensionConfig, IntervalSpec, build_trace_measure, make_scale, preset, validate

# Preset catalogue.  Each is a worked configuration used across the
# tests and the command line.  ex218 enumerates Cantor gaps, so only a
# few of its intervals are shown here.
for name in ("ex215", "ex216", "ex217", "ex218"):
    cfg = preset(name)
    report = validate(cfg)
    print(f"{name}: {len(cfg.intervals)} interval(s), ok={report.ok}")
    for spec in cfg.intervals[:3]:
        print(f"   {spec.describe()}  blocks={len(spec.scale.blocks)}")
    if len(cfg.intervals) > 3:
        print(f"   ... and {len(cfg.intervals) - 3} more")
    if cfg.complement is not None:
        c = cfg.complement
        print(f"   complement: points={c.points} segments={len(c.segments)} dust={len(c.dust)}")

# Validation catches bad geometry instead of letting it poison a
# simulation later.
print("\noverlap detection")
bad = ExtensionConfig(
    (
        IntervalSpec(make_scale(0.0, 2.0, include_lo=True, include_hi=True)),
        IntervalSpec(make_scale(1.0, 3.0, include_lo=True, include_hi=True)),
    ),
    name="bad",
)
report = validate(bad)
print(f"  ok={report.ok}")
for err in report.errors:
    print(f"  error: {err}")

# The measure carried by the singular set.  On ex215 it is the staircase
# mass of the unit block; on ex218 (all scales plain) it degenerates to
# atoms at the included endpoints, each weighted by its interval's
# length, rays capped at one.
mu = build_trace_measure(preset("ex215"))
print("\nex215 trace measure")
print(f"  mass on [0, 1]: {mu.mass(0.0, 1.0)}   atoms: {len(mu.atoms)}")

mu = build_trace_measure(preset("ex218", depth=4))
print("ex218 trace measure (depth 4)")
print(f"  purely atomic: {mu.is_purely_atomic()}, {len(mu.atoms)} atoms")
print(f"  atom at the gap endpoint 1/3: {mu.atom_mass(1 / 3):.12f}")
print(f"  total mass on [0, 1]: {mu.mass(0.0, 1.0):.12f}")
