"""Trace energies on the singular skeleton and harmonic interpolation.

Removing every open stretch where the process runs at Brownian rate leaves a
closed set: Cantor remnants of the blocks, boundary-stack zones, included
interval endpoints, and whatever the complement contributes.  A function on
that set carries two natural quadratic energies.  The Brownian one is a pure
jump sum across the finite gaps.  The extension one integrates the squared
singular density against the singular measure and only jumps across gaps
that lie inside an invariant interval, since the extension process never
leaves its interval.  Comparing increments across cells at two resolutions
decides whether the function extends absolutely continuously or genuinely
needs the singular coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .config import ExtensionConfig
from .forms import IntervalPart, PiecewiseFn, _singular_mass

__all__ = [
    "TraceStructure",
    "TraceFn",
    "TraceKind",
    "MembershipReport",
    "trace_structure",
    "trace_restriction",
    "harmonic_extension",
    "trace_energy_bm",
    "trace_energy_ext",
    "jump_contributions",
    "trace_membership",
]


def _interval_cells(iv, depth):
    sc = iv.scale
    out = []
    if sc.include_lo:
        out.append((Fraction(sc.lo), Fraction(sc.lo)))
    if sc.include_hi:
        out.append((Fraction(sc.hi), Fraction(sc.hi)))
    for blk in sc.blocks:
        out.extend((rlo, rhi) for rlo, rhi, _ in blk.remnants(depth))
    for s in sc.stacks():
        for k in range(depth):
            # deeper shells are geometrically small; resolve them coarser
            shell = s.shell(k)
            out.extend((rlo, rhi) for rlo, rhi, _ in shell.remnants(max(2, depth - k)))
        tail = s.delta / 2**depth
        if s.side == "lo":
            out.append((s.at, s.at + tail))
        else:
            out.append((s.at - tail, s.at))
    return out


@dataclass(frozen=True)
class TraceStructure:
    """Closed cells of the trace set at a working depth, with the gaps between.

    Cells are disjoint closed intervals, possibly degenerate; each gap records
    the index of the invariant interval it lies in, or None when it crosses
    ground outside every interval.
    """

    depth: int
    cells: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float, int | None], ...]
    n_intervals: int

    def span(self) -> tuple[float, float]:
        return self.cells[0][0], self.cells[-1][1]


def trace_structure(config: ExtensionConfig, depth: int = 8) -> TraceStructure:
    """Resolve the trace set: all singular support plus retained endpoints."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    raw = []
    for iv in config.intervals:
        raw.extend(_interval_cells(iv, depth))
    comp = config.complement
    raw.extend((Fraction(p), Fraction(p)) for p in comp.points)
    raw.extend((Fraction(a), Fraction(b)) for a, b in comp.segments)
    for d in comp.dust:
        raw.extend(d.pieces())
    if not raw:
        raise ValueError("the trace set is empty: every point lies on an open Brownian stretch")
    raw.sort()
    # merge in float resolution: exact and rounded descriptions of the same
    # endpoint must not leave a phantom zero-length gap
    merged = [list(raw[0])]
    for lo, hi in raw[1:]:
        if float(lo) <= float(merged[-1][1]):
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    cells = tuple((float(lo), float(hi)) for lo, hi in merged)
    gaps = []
    for (_, h1), (l2, _) in zip(cells, cells[1:]):
        gaps.append((h1, l2, config.locate((h1 + l2) / 2)))
    return TraceStructure(depth, cells, tuple(gaps), len(config.intervals))


@dataclass(frozen=True)
class TraceFn:
    """Function on the trace set: cell endpoint values plus singular densities.

    ``values[i]`` holds the function at the left and right endpoint of cell i;
    ``densities[n]`` is the derivative with respect to the singular coordinate
    of interval n, used by the extension-form energy.
    """

    structure: TraceStructure
    values: tuple[tuple[float, float], ...]
    densities: tuple[float, ...]

    def __post_init__(self):
        st = self.structure
        if len(self.values) != len(st.cells):
            raise ValueError("one value pair per cell is required")
        if len(self.densities) != st.n_intervals:
            raise ValueError("one singular density per interval is required")
        for (lo, hi), (vl, vh) in zip(st.cells, self.values):
            if not (math.isfinite(vl) and math.isfinite(vh)):
                raise ValueError("trace values must be finite")
            if lo == hi and vl != vh:
                raise ValueError(f"point cell at {lo} carries two different values")
        if any(not math.isfinite(d) for d in self.densities):
            raise ValueError("singular densities must be finite")

    def shifted(self, c: float) -> "TraceFn":
        return TraceFn(
            self.structure,
            tuple((vl + c, vh + c) for vl, vh in self.values),
            self.densities,
        )

    def scaled(self, lam: float) -> "TraceFn":
        return TraceFn(
            self.structure,
            tuple((lam * vl, lam * vh) for vl, vh in self.values),
            tuple(lam * d for d in self.densities),
        )


def trace_restriction(config, fn, depth: int = 8, densities=None) -> TraceFn:
    """Sample a function at the cell endpoints of the depth-``depth`` trace set."""
    f = fn.eval if isinstance(fn, PiecewiseFn) else fn
    st = trace_structure(config, depth)
    values = tuple((float(f(lo)), float(f(hi))) for lo, hi in st.cells)
    if densities is None:
        densities = (0.0,) * st.n_intervals
    return TraceFn(st, values, tuple(float(d) for d in densities))


def trace_energy_bm(config: ExtensionConfig, tf: TraceFn) -> float:
    """Jump energy of the Brownian trace: half the sum of (dv)^2/gap over gaps."""
    st = tf.structure
    terms = []
    for i, (glo, ghi, _) in enumerate(st.gaps):
        dv = tf.values[i + 1][0] - tf.values[i][1]
        terms.append(dv * dv / (ghi - glo))
    return 0.5 * math.fsum(terms)


def trace_energy_ext(config: ExtensionConfig, tf: TraceFn) -> float:
    """Extension trace energy: singular term plus in-interval jump sum.

    A nonzero density on an interval whose singular mass is infinite makes
    the singular term diverge, reported as inf.
    """
    st = tf.structure
    w_terms = []
    for n, iv in enumerate(config.intervals):
        d = tf.densities[n]
        if d == 0.0:
            continue
        if iv.scale.stacks():
            return math.inf
        w_terms.append(d * d * iv.scale.total_block_weight())
    jump = []
    for i, (glo, ghi, inside) in enumerate(st.gaps):
        if inside is None:
            continue
        dv = tf.values[i + 1][0] - tf.values[i][1]
        jump.append(dv * dv / (ghi - glo))
    return 0.5 * (math.fsum(w_terms) + math.fsum(jump))


def jump_contributions(config, tf: TraceFn, form: str = "brownian"):
    """Per-gap summands of the jump energy, as (gap lo, gap hi, contribution).

    With form="extension" the gaps outside every interval are dropped; the
    contributions then sum to the jump part of the extension trace energy.
    """
    if form not in ("brownian", "extension"):
        raise ValueError(f"unknown form {form!r}")
    st = tf.structure
    rows = []
    for i, (glo, ghi, inside) in enumerate(st.gaps):
        if form == "extension" and inside is None:
            continue
        dv = tf.values[i + 1][0] - tf.values[i][1]
        rows.append((glo, ghi, 0.5 * dv * dv / (ghi - glo)))
    return rows


def _cell_mass(config, clo: float, chi: float) -> float:
    return math.fsum(_singular_mass(iv.scale, clo, chi) for iv in config.intervals)


def _interp_value(config, tf: TraceFn, x: float) -> float:
    """The harmonic interpolation evaluated at x: affine across gaps, flat
    beyond the extreme cells, mass-linear inside cells carrying singular mass."""
    st = tf.structure
    cells, values = st.cells, tf.values
    if x <= cells[0][0]:
        return values[0][0]
    if x >= cells[-1][1]:
        return values[-1][1]
    for i, (clo, chi) in enumerate(cells):
        if x < clo:
            glo, ghi = cells[i - 1][1], clo
            vl, vh = values[i - 1][1], values[i][0]
            return vl + (vh - vl) * (x - glo) / (ghi - glo)
        if x <= chi:
            vl, vh = values[i]
            if x == clo or vl == vh:
                return vl
            mass = _cell_mass(config, clo, chi)
            if math.isinf(mass):
                raise ValueError("no finite interpolation through an infinite singular stretch")
            if mass > 0.0:
                part = math.fsum(_singular_mass(iv.scale, clo, x) for iv in config.intervals)
                return vl + (vh - vl) * part / mass
            return vl + (vh - vl) * (x - clo) / (chi - clo)
    raise AssertionError("unreachable")


def harmonic_extension(config: ExtensionConfig, tf: TraceFn) -> PiecewiseFn:
    """Extend a trace function to the whole state space.

    Affine across every finite gap, constant beyond the extreme cells, and
    through each cell linear in the singular coordinate when the cell carries
    singular mass, linear in space otherwise.  The result agrees with the
    trace values at every resolved cell endpoint.
    """
    st = tf.structure
    cells, values = st.cells, tf.values

    # per-cell and per-gap (u, w) densities
    cell_uw = []
    for (clo, chi), (vl, vh) in zip(cells, values):
        dv = vh - vl
        if clo == chi:
            cell_uw.append((0.0, 0.0))
            continue
        mass = _cell_mass(config, clo, chi)
        if math.isinf(mass):
            if dv != 0.0:
                raise ValueError(
                    "increment across an infinite singular stretch has no "
                    "finite-density representation"
                )
            cell_uw.append((0.0, 0.0))
        elif mass > 0.0:
            cell_uw.append((0.0, dv / mass))
        else:
            cell_uw.append((dv / (chi - clo), 0.0))
    gap_u = []
    for i, (glo, ghi, inside) in enumerate(st.gaps):
        dv = values[i + 1][0] - values[i][1]
        if inside is None and dv != 0.0:
            raise ValueError(
                f"gap ({glo}, {ghi}) lies outside the state space but the "
                "trace values differ across it"
            )
        gap_u.append(dv / (ghi - glo))

    def span_uw(x: float) -> tuple[float, float]:
        for i, (clo, chi) in enumerate(cells):
            if x < clo:
                return (gap_u[i - 1], 0.0) if i > 0 else (0.0, 0.0)
            if x <= chi:
                return cell_uw[i]
        return (0.0, 0.0)

    parts = []
    for iv in config.intervals:
        edges = {iv.lo, iv.hi}
        for clo, chi in cells:
            for b in (clo, chi):
                if iv.lo < b < iv.hi:
                    edges.add(b)
        edges = sorted(edges)
        pieces = []
        for b1, b2 in zip(edges, edges[1:]):
            mid = b1 + 0.5 * (b2 - b1) if math.isfinite(b1) and math.isfinite(b2) else (
                b2 - 1.0 if math.isfinite(b2) else b1 + 1.0
            )
            u, w = span_uw(mid)
            pieces.append((b1, b2, u, w))
        anchor = _interp_value(config, tf, iv.scale.e)
        parts.append(IntervalPart(anchor, tuple(pieces)))
    return PiecewiseFn(config, tuple(parts))


class TraceKind(Enum):
    BROWNIAN_TRACE = "brownian-trace"
    EXTENSION_TRACE_ONLY = "extension-trace-only"
    NEITHER = "neither"


@dataclass(frozen=True)
class MembershipReport:
    kind: TraceKind
    deficit: float
    fine_ratio: float
    coarse_ratio: float
    bm_energy: float
    ext_energy: float
    note: str


def _ratio(deficit: float, length: float) -> float:
    if deficit == 0.0:
        return 0.0
    if length == 0.0:
        return math.inf
    return deficit * deficit / length


def trace_membership(config, tf: TraceFn, window: tuple[float, float]) -> MembershipReport:
    """Classify a trace function by how its cell increments behave under refinement.

    An absolutely continuous extension gains nothing on the (ideally null)
    trace set, so the total increment picked up inside cells must vanish as
    the cells shrink.  The cheapest absolutely continuous crossing of the
    cells costs deficit^2 / (total cell length); comparing that cost at the
    working resolution against a coarsened one (merging cells across the
    narrowest half of the gaps) decides the trend without leaving this depth.
    """
    w_lo, w_hi = window
    if not (math.isfinite(w_lo) and math.isfinite(w_hi) and w_lo < w_hi):
        raise ValueError("window must be a finite nonempty interval")
    st = tf.structure
    sel = [i for i, (clo, chi) in enumerate(st.cells) if clo >= w_lo and chi <= w_hi]
    if not sel:
        raise ValueError("window contains no trace cells")
    sel = list(range(min(sel), max(sel) + 1))

    deficit = math.fsum(tf.values[i][1] - tf.values[i][0] for i in sel)
    total_len = math.fsum(st.cells[i][1] - st.cells[i][0] for i in sel)
    fine = _ratio(deficit, total_len)

    gap_lens = [st.gaps[i][1] - st.gaps[i][0] for i in sel[:-1]]
    if gap_lens:
        cut = sorted(gap_lens)[len(gap_lens) // 2]
        groups = [[sel[0]]]
        for i, gl in zip(sel[1:], gap_lens):
            if gl <= cut:
                groups[-1].append(i)
            else:
                groups.append([i])
        c_deficit = math.fsum(
            tf.values[g[-1]][1] - tf.values[g[0]][0] for g in groups
        )
        c_len = math.fsum(st.cells[g[-1]][1] - st.cells[g[0]][0] for g in groups)
        coarse = _ratio(c_deficit, c_len)
    else:
        coarse = fine

    bm_e = trace_energy_bm(config, tf)
    ext_e = trace_energy_ext(config, tf)
    absolutely_continuous = fine <= coarse
    if absolutely_continuous and math.isfinite(bm_e):
        kind = TraceKind.BROWNIAN_TRACE
        trend = "vanishes under refinement" if fine < coarse else "stays flat"
        note = (
            f"cell crossing cost {fine:.3e} at depth {st.depth} vs {coarse:.3e} "
            f"coarsened; the increment trapped on the trace set {trend}"
        )
    elif math.isfinite(ext_e):
        kind = TraceKind.EXTENSION_TRACE_ONLY
        note = (
            f"cell crossing cost grows under refinement ({coarse:.3e} -> {fine:.3e}); "
            f"the deficit {deficit:.3e} never telescopes away"
        )
    else:
        kind = TraceKind.NEITHER
        note = "both trace energies diverge or the increments never telescope"
    return MembershipReport(kind, deficit, fine, coarse, bm_e, ext_e, note)
