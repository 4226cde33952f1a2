"""Collapse the Lebesgue components of an interval onto its singular set.

The darning transform sends x to the W-mass accumulated between the anchor
and x, so every maximal stretch without singular mass lands on a single
image point.  Pushing Lebesgue measure through the transform yields a purely
atomic measure: one atom per collapsed stretch, of mass equal to its length.
The image process is a Brownian motion time-changed by that measure, with
reflection at included image endpoints and absorption at finite excluded
ones; an included endpoint carrying a positive atom reflects slowly.

Everything here enumerates at a working depth.  Gap atoms are exact; the
not-yet-resolved remainder of each Cantor block (and the unenumerated tail
of a boundary stack) is carried as aggregate pseudo-atoms so that the total
image mass matches the source length exactly at every depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .config import ExtensionConfig
from .forms import PiecewiseFn, _singular_mass

__all__ = [
    "DegenerateDarning",
    "DarnedSpec",
    "darning_map",
    "darn",
    "darned_energy",
    "energy_equivalence_check",
]


class DegenerateDarning(ValueError):
    """The interval carries no singular mass, so there is nothing to darn."""


def _w_items(scale):
    """Singular-support components in order: stacks and blocks, as (lo, hi, obj)."""
    items = []
    for blk in scale.blocks:
        items.append((blk.lo, blk.hi, ("block", blk)))
    for s in scale.stacks():
        if s.side == "lo":
            items.append((s.at, s.at + s.delta, ("stack", s)))
        else:
            items.append((s.at - s.delta, s.at, ("stack", s)))
    items.sort(key=lambda it: it[0])
    return items


def _signed_w_mass(scale, x) -> Fraction | float:
    """Exact image coordinate: W-mass between the anchor and x, signed."""
    fx = Fraction(x)
    fe = Fraction(scale.e)
    if fx == fe:
        return Fraction(0)
    lo, hi = (fe, fx) if fx > fe else (fx, fe)
    m = scale._singular_exact(lo, hi)
    if m == math.inf:
        return math.inf if fx > fe else -math.inf
    return m if fx > fe else -m


def darning_map(config: ExtensionConfig, n: int, x) -> float:
    """Image coordinate of x under the collapse of interval n.

    Non-decreasing, zero at the anchor, constant on each stretch without
    singular mass.  x must lie in the span of the singular support (with
    the interval's own endpoints when they are part of the state space).
    """
    iv = config.intervals[n]
    scale = iv.scale
    items = _w_items(scale)
    if not items:
        raise DegenerateDarning(f"interval {n} {iv.describe()} has no singular part")
    r_lo = Fraction(iv.lo) if math.isfinite(iv.lo) else items[0][0]
    r_hi = Fraction(iv.hi) if math.isfinite(iv.hi) else items[-1][1]
    fx = Fraction(x)
    # the closure is allowed: j extends continuously, with an infinite
    # image at a stacked endpoint
    if not r_lo <= fx <= r_hi:
        raise ValueError(f"{x} outside the darning domain of interval {n}")
    m = _signed_w_mass(scale, fx)
    return m if m in (math.inf, -math.inf) else float(m)


@dataclass(frozen=True)
class DarnedSpec:
    """Image interval, boundary behavior, and the atomic image measure.

    ``atoms`` are the collapsed Lebesgue stretches resolved at this depth;
    ``residue`` aggregates everything deeper (unresolved Cantor remnants,
    stack tails) so that masses always add up to the source length.  Masses
    stay exact rationals.
    """

    interval_index: int
    depth: int
    source_lo: float
    source_hi: float
    include_lo: bool
    include_hi: bool
    image_lo: float
    image_hi: float
    atoms: tuple[tuple[float, Fraction], ...]
    residue: tuple[tuple[float, Fraction], ...]

    def total_mass(self) -> Fraction:
        return sum((m for _, m in self.atoms + self.residue), Fraction(0))

    def atom_mass(self, y: float) -> Fraction:
        return sum((m for loc, m in self.atoms if loc == y), Fraction(0))

    def slow_reflection(self) -> tuple[bool, bool]:
        """(at image_lo, at image_hi): included endpoint with a positive atom."""
        lo = self.include_lo and self.atom_mass(self.image_lo) > 0
        hi = self.include_hi and self.atom_mass(self.image_hi) > 0
        return lo, hi


def darn(config: ExtensionConfig, n: int, depth: int = 8) -> DarnedSpec:
    """Collapse interval n at the given enumeration depth."""
    iv = config.intervals[n]
    scale = iv.scale
    items = _w_items(scale)
    if not items:
        raise DegenerateDarning(f"interval {n} {iv.describe()} has no singular part")

    def image(x) -> float:
        m = _signed_w_mass(scale, x)
        return m if m in (math.inf, -math.inf) else float(m)

    r_lo = Fraction(iv.lo) if math.isfinite(iv.lo) else items[0][0]
    r_hi = Fraction(iv.hi) if math.isfinite(iv.hi) else items[-1][1]
    if math.isfinite(iv.lo) and not iv.include_lo:
        image_lo = -math.inf
    else:
        image_lo = image(r_lo)
    if math.isfinite(iv.hi) and not iv.include_hi:
        image_hi = math.inf
    else:
        image_hi = image(r_hi)

    atoms: list[tuple[float, Fraction]] = []
    residue: list[tuple[float, Fraction]] = []

    def flat_atom(lo, hi):
        # a stretch without singular mass collapses to one image point
        if hi > lo:
            atoms.append((image(lo), Fraction(hi) - Fraction(lo)))

    def enumerate_block(blk):
        for _, glo, ghi, _ in blk.gaps(depth):
            atoms.append((image(glo), ghi - glo))
        for rlo, rhi, _ in blk.remnants(depth):
            # aggregate sits mid-span in image coordinates, clear of the
            # dyadic positions that gap atoms occupy
            mid = (_signed_w_mass(scale, rlo) + _signed_w_mass(scale, rhi)) / 2
            residue.append((float(mid), rhi - rlo))

    prev_hi = r_lo if iv.include_lo else None
    for lo, hi, (kind, obj) in items:
        if prev_hi is not None:
            flat_atom(prev_hi, lo)
        prev_hi = hi
        if kind == "block":
            enumerate_block(obj)
            continue
        # boundary stack: enumerate the first ``depth`` shells, then carry
        # the rest of the zone as one aggregate at the cutoff image
        for k in range(depth):
            enumerate_block(obj.shell(k))
        tail = obj.delta * Fraction(1, 2**depth)
        if obj.side == "lo":
            cut = obj.at + tail
        else:
            cut = obj.at - tail
        residue.append((image(cut), tail))
    if iv.include_hi and prev_hi is not None:
        flat_atom(prev_hi, r_hi)

    atoms.sort(key=lambda a: a[0])
    residue.sort(key=lambda a: a[0])
    return DarnedSpec(
        interval_index=n,
        depth=depth,
        source_lo=float(r_lo),
        source_hi=float(r_hi),
        include_lo=iv.include_lo,
        include_hi=iv.include_hi,
        image_lo=image_lo,
        image_hi=image_hi,
        atoms=tuple(atoms),
        residue=tuple(residue),
    )


def _check_nodes(nodes):
    if len(nodes) < 2:
        raise ValueError("need at least two nodes")
    xs = [x for x, _ in nodes]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("node positions must be strictly increasing")
    if any(not math.isfinite(x) or not math.isfinite(v) for x, v in nodes):
        raise ValueError("nodes must be finite")


def darned_energy(spec: DarnedSpec, nodes) -> float:
    """Dirichlet energy of a piecewise-linear function on the image interval.

    ``nodes`` is a sorted list of (position, value); the function continues
    constantly beyond the outer nodes.  A finite excluded image endpoint is
    absorbing, so the boundary limit there must vanish.
    """
    nodes = [(float(x), float(v)) for x, v in nodes]
    _check_nodes(nodes)
    lo_x, lo_v = nodes[0]
    hi_x, hi_v = nodes[-1]
    if lo_x < spec.image_lo or hi_x > spec.image_hi:
        raise ValueError("nodes must lie inside the image interval")
    if math.isfinite(spec.image_lo) and not spec.include_lo and lo_v != 0.0:
        raise ValueError(
            f"boundary limit {lo_v} at absorbing endpoint {spec.image_lo} must be 0"
        )
    if math.isfinite(spec.image_hi) and not spec.include_hi and hi_v != 0.0:
        raise ValueError(
            f"boundary limit {hi_v} at absorbing endpoint {spec.image_hi} must be 0"
        )
    return 0.5 * math.fsum(
        (v2 - v1) ** 2 / (x2 - x1) for (x1, v1), (x2, v2) in zip(nodes, nodes[1:])
    )


def energy_equivalence_check(
    config: ExtensionConfig, n: int, f: PiecewiseFn, depth: int = 20
) -> tuple[float, float, float]:
    """Source-side vs image-side energy of a complement member on interval n.

    The image function interpolates f on the dyadic image grid of each block
    at the given depth, plus the images of f's breakpoints; between those
    nodes the true image is linear, so the two energies agree up to rounding.
    Returns (source, image, relative gap).
    """
    iv = config.intervals[n]
    scale = iv.scale
    part = f.parts[n]
    if any(u != 0.0 for _, _, u, _ in part.pieces):
        raise ValueError("interval part carries a Lebesgue rate; not in the complement")

    items = _w_items(scale)
    if not items:
        raise DegenerateDarning(f"interval {n} {iv.describe()} has no singular part")
    source = 0.5 * math.fsum(
        w * w * _singular_mass(scale, lo, hi) for lo, hi, _, w in part.pieces if w
    )
    if not math.isfinite(source):
        raise ValueError("source energy diverges; not in the L2 complement domain")

    # walk the singular support left to right in image coordinates: inside a
    # block the remnant grid at this depth gives the images exactly, so only
    # the walk endpoints and the piece breakpoints need a mass evaluation
    r_lo = Fraction(iv.lo) if math.isfinite(iv.lo) else items[0][0]
    r_hi = Fraction(iv.hi) if math.isfinite(iv.hi) else items[-1][1]
    sub = []
    for _, _, (kind, obj) in items:
        if kind == "block":
            sub.append((obj, depth))
        else:
            ks = range(depth - 1, -1, -1) if obj.side == "lo" else range(depth)
            # deeper shells are geometrically small; resolve them coarser
            sub.extend((obj.shell(k), max(2, depth - k)) for k in ks)

    # density switches at the images of the interior breakpoints
    i0 = next(i for i, p in enumerate(part.pieces) if p[1] > r_lo)
    dens = Fraction(part.pieces[i0][3])
    switches = [
        (_signed_w_mass(scale, Fraction(p[0])), Fraction(p[3]))
        for p in part.pieces[i0 + 1 :]
        if Fraction(p[0]) <= r_hi
    ]

    j_prev = _signed_w_mass(scale, sub[0][0].lo)
    v = f.eval(float(r_lo) if math.isfinite(_signed_w_mass(scale, r_lo)) else float(sub[0][0].lo))
    nodes = [(float(j_prev), v)]

    def advance(j_next):
        nonlocal j_prev, dens, v
        while switches and switches[0][0] <= j_next:
            bj, bdens = switches.pop(0)
            v += float(dens * (bj - j_prev))
            nodes.append((float(bj), v))
            j_prev, dens = bj, bdens
        v += float(dens * (j_next - j_prev))
        nodes.append((float(j_next), v))
        j_prev = j_next

    cum = j_prev
    for blk, d in sub:
        step = blk.weight * Fraction(1, 2**d)
        for k in range(1, 2**d):
            advance(cum + k * step)
        cum += blk.weight
        advance(cum)
    if math.isfinite(_signed_w_mass(scale, r_hi)):
        advance(j_prev)  # the trailing stretch collapses onto the last image

    # collapsed stretches give repeated image positions; keep the first
    dedup = []
    for x, val in nodes:
        if dedup and x <= dedup[-1][0]:
            continue
        dedup.append((x, val))
    image_energy = 0.5 * math.fsum(
        (v2 - v1) ** 2 / (x2 - x1) for (x1, v1), (x2, v2) in zip(dedup, dedup[1:])
    ) if len(dedup) >= 2 else 0.0

    if source == 0.0 and image_energy == 0.0:
        return 0.0, 0.0, 0.0
    gap = abs(source - image_energy) / max(source, image_energy)
    return source, image_energy, gap
