"""Energy form, membership tests, and the constructive decomposition.

Members of the form domain are stored piecewise: on each invariant interval
a function is an anchor value plus a piecewise-constant density against the
scale measure dt, split into a Lebesgue rate u (the part seen on U, where
dx/dt = 1) and a singular rate w (the part seen on W).  Every integral this
module needs then reduces to finite sums of interval lengths and W-masses,
so energies and decompositions are computed without quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .cantor import iter_gaps
from .config import ExtensionConfig
from .scale import ScaleFunction

__all__ = [
    "IntervalPart",
    "PiecewiseFn",
    "BUILTIN_NAMES",
    "named_function",
    "energy",
    "bilinear",
    "in_extended_space",
    "is_in_complement",
    "orthogonal_decompose",
    "CantorInterpolant",
    "cantor_interpolant",
    "CompensatorResult",
    "compensator",
]


def _singular_mass(scale: ScaleFunction, lo: float, hi: float) -> float:
    """W-mass of (lo, hi) with infinite bounds clipped to the singular support."""
    support: list[float] = []
    for blk in scale.blocks:
        support.extend((float(blk.lo), float(blk.hi)))
    for s in scale.stacks():
        if s.side == "lo":
            support.extend((float(s.at), float(s.at + s.delta)))
        else:
            support.extend((float(s.at - s.delta), float(s.at)))
    if not support:
        return 0.0
    lo = max(lo, min(support))
    hi = min(hi, max(support))
    if hi <= lo:
        return 0.0
    return scale.singular_between(lo, hi)


@dataclass(frozen=True)
class IntervalPart:
    """Restriction of a function to one invariant interval.

    ``pieces`` are (lo, hi, u, w) cells that tile the interval in order;
    u is the density against dx, w the density against the singular part.
    """

    anchor_value: float
    pieces: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        for i, (lo, hi, _, _) in enumerate(self.pieces):
            if not lo < hi:
                raise ValueError(f"piece {i}: empty cell ({lo}, {hi})")
            if i and self.pieces[i - 1][1] != lo:
                raise ValueError(f"piece {i}: cells must tile without holes")


@dataclass(frozen=True)
class PiecewiseFn:
    """Function on the union of invariant intervals, one part per interval."""

    config: ExtensionConfig
    parts: tuple[IntervalPart, ...]

    def __post_init__(self):
        if len(self.parts) != len(self.config.intervals):
            raise ValueError("one part per configuration interval required")
        for part, iv in zip(self.parts, self.config.intervals):
            if part.pieces:
                if part.pieces[0][0] != iv.lo or part.pieces[-1][1] != iv.hi:
                    raise ValueError(f"pieces must span {iv.describe()}")

    def part(self, index: int) -> IntervalPart:
        return self.parts[index]

    def eval(self, x: float) -> float:
        """Value at x; raises when x lies in no invariant interval."""
        idx = self.config.locate(x)
        if idx is None:
            raise ValueError(f"{x} lies in the trap complement; no value defined")
        part = self.parts[idx]
        scale = self.config.interval(idx).scale
        e = scale.e
        if x == e:
            return part.anchor_value
        lo_q, hi_q = (e, x) if x > e else (x, e)
        acc = part.anchor_value
        sign = 1.0 if x > e else -1.0
        for lo, hi, u, w in part.pieces:
            a, b = max(lo, lo_q), min(hi, hi_q)
            if b <= a:
                continue
            step = 0.0
            if u:
                step += u * (b - a)
            if w:
                step += w * scale.singular_between(a, b)
            acc += sign * step
        return acc

    __call__ = eval

    def _zip_pieces(self, other: "PiecewiseFn"):
        """Common refinement of both tilings, per interval."""
        for pa, pb in zip(self.parts, other.parts):
            cells = []
            cuts = sorted({x for lo, hi, _, _ in pa.pieces + pb.pieces for x in (lo, hi)})
            for lo, hi in zip(cuts, cuts[1:]):
                ua = wa = ub = wb = 0.0
                for plo, phi, u, w in pa.pieces:
                    if plo <= lo and hi <= phi:
                        ua, wa = u, w
                        break
                for plo, phi, u, w in pb.pieces:
                    if plo <= lo and hi <= phi:
                        ub, wb = u, w
                        break
                cells.append((lo, hi, ua, wa, ub, wb))
            yield pa, pb, cells

    def _combine(self, other: "PiecewiseFn", cu: float, cv: float) -> "PiecewiseFn":
        if self.config is not other.config and self.config != other.config:
            raise ValueError("operands live on different configurations")
        parts = []
        for pa, pb, cells in self._zip_pieces(other):
            pieces = tuple(
                (lo, hi, cu * ua + cv * ub, cu * wa + cv * wb)
                for lo, hi, ua, wa, ub, wb in cells
            )
            parts.append(IntervalPart(cu * pa.anchor_value + cv * pb.anchor_value, pieces))
        return PiecewiseFn(self.config, tuple(parts))

    def __add__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other: "PiecewiseFn") -> "PiecewiseFn":
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, scalar: float) -> "PiecewiseFn":
        parts = tuple(
            IntervalPart(
                scalar * p.anchor_value,
                tuple((lo, hi, scalar * u, scalar * w) for lo, hi, u, w in p.pieces),
            )
            for p in self.parts
        )
        return PiecewiseFn(self.config, parts)

    __rmul__ = __mul__


# -- built-in functions ------------------------------------------------------

BUILTIN_NAMES = ("identity", "cantor", "scale", "tent", "indicator-smoothed")


def _tent(x: float) -> float:
    return max(0.0, 1.0 - abs(x))


def _indicator_smoothed(x: float) -> float:
    # ramps on [-2,-1] and [1,2] around the plateau 1 on [-1,1]
    a = abs(x)
    if a <= 1.0:
        return 1.0
    if a >= 2.0:
        return 0.0
    return 2.0 - a


def _from_x_slopes(config: ExtensionConfig, slopes, value_at) -> PiecewiseFn:
    """Absolutely continuous builder: u from ``slopes`` cells, w = 0.

    ``slopes`` is a global list of (lo, hi, u); u = 0 outside.
    """
    parts = []
    for iv in config.intervals:
        cuts = {iv.lo, iv.hi}
        for lo, hi, _ in slopes:
            if iv.lo < lo < iv.hi:
                cuts.add(lo)
            if iv.lo < hi < iv.hi:
                cuts.add(hi)
        grid = sorted(cuts)
        pieces = []
        for lo, hi in zip(grid, grid[1:]):
            u = 0.0
            for slo, shi, s in slopes:
                if slo <= lo and hi <= shi:
                    u = s
                    break
            pieces.append((lo, hi, u, 0.0))
        parts.append(IntervalPart(value_at(iv.scale.e), tuple(pieces)))
    return PiecewiseFn(config, tuple(parts))


def named_function(config: ExtensionConfig, name: str) -> PiecewiseFn:
    """Built-ins accepted by the command line and used throughout the tests."""
    if name == "identity":
        parts = tuple(
            IntervalPart(iv.scale.e, ((iv.lo, iv.hi, 1.0, 0.0),)) for iv in config.intervals
        )
        return PiecewiseFn(config, parts)
    if name == "cantor":
        # accumulated singular mass: on a unit-block line this is the
        # Cantor function itself
        parts = tuple(
            IntervalPart(0.0, ((iv.lo, iv.hi, 0.0, 1.0),)) for iv in config.intervals
        )
        return PiecewiseFn(config, parts)
    if name == "scale":
        parts = tuple(
            IntervalPart(0.0, ((iv.lo, iv.hi, 1.0, 1.0),)) for iv in config.intervals
        )
        return PiecewiseFn(config, parts)
    if name == "tent":
        return _from_x_slopes(config, [(-1.0, 0.0, 1.0), (0.0, 1.0, -1.0)], _tent)
    if name == "indicator-smoothed":
        return _from_x_slopes(
            config, [(-2.0, -1.0, 1.0), (1.0, 2.0, -1.0)], _indicator_smoothed
        )
    raise ValueError(f"unknown function {name!r}; available: {', '.join(BUILTIN_NAMES)}")


# -- energy and membership ---------------------------------------------------


def _check_aligned(config: ExtensionConfig, f: PiecewiseFn) -> None:
    if f.config is not config and f.config != config:
        raise ValueError("function was built for a different configuration")


def energy(config: ExtensionConfig, f: PiecewiseFn) -> float:
    """Half the dt-integral of the squared density, summed over intervals.

    Returns math.inf when any piece has non-square-integrable density, e.g.
    a nonzero Lebesgue rate on an unbounded cell or a nonzero singular rate
    against a boundary stack.
    """
    _check_aligned(config, f)
    terms = []
    for part, iv in zip(f.parts, config.intervals):
        scale = iv.scale
        for lo, hi, u, w in part.pieces:
            if u:
                leb = hi - lo
                if not math.isfinite(leb):
                    return math.inf
                terms.append(u * u * leb)
            if w:
                m = _singular_mass(scale, lo, hi)
                if not math.isfinite(m):
                    return math.inf
                terms.append(w * w * m)
    return 0.5 * math.fsum(terms)


def bilinear(config: ExtensionConfig, f: PiecewiseFn, g: PiecewiseFn) -> float:
    """The energy form evaluated on a pair, over the common refinement."""
    _check_aligned(config, f)
    _check_aligned(config, g)
    terms = []
    for (pa, pb, cells), iv in zip(f._zip_pieces(g), config.intervals):
        for lo, hi, ua, wa, ub, wb in cells:
            if ua and ub:
                terms.append(ua * ub * (hi - lo))
            if wa and wb:
                terms.append(wa * wb * _singular_mass(iv.scale, lo, hi))
    return 0.5 * math.fsum(terms)


def in_extended_space(config: ExtensionConfig, f: PiecewiseFn) -> bool:
    """Finite values and finite energy; absolute continuity is structural."""
    _check_aligned(config, f)
    if any(not math.isfinite(p.anchor_value) for p in f.parts):
        return False
    return math.isfinite(energy(config, f))


def is_in_complement(config: ExtensionConfig, f: PiecewiseFn) -> bool:
    """True when no cell carries a Lebesgue rate: f is invisible to H1."""
    _check_aligned(config, f)
    return all(u == 0.0 for p in f.parts for _, _, u, _ in p.pieces)


# -- constructive decomposition ----------------------------------------------


def orthogonal_decompose(
    config: ExtensionConfig, f: PiecewiseFn
) -> tuple[PiecewiseFn, PiecewiseFn]:
    """Split f into an absolutely continuous part and a complement part.

    f1 collects the Lebesgue rates: on each bounded interval the mean rate
    is subtracted so the local primitive vanishes at both endpoints, and the
    subtracted means are restored by one global primitive taken from 0.  f2
    is the remainder; it carries the singular rates plus per-interval
    constants and pays no energy against any absolutely continuous function.
    The additive constant is fixed by f1 = 0 at the first interval's anchor.
    """
    _check_aligned(config, f)

    # mean Lebesgue rate per bounded interval; 0 on unbounded ones
    flat: list[tuple[float, float, float]] = []
    c1: list[float] = []
    for part, iv in zip(f.parts, config.intervals):
        if iv.bounded:
            m = math.fsum(u * (hi - lo) for lo, hi, u, _ in part.pieces)
            c = m / iv.length
        else:
            c = 0.0
        c1.append(c)
        if c:
            flat.append((iv.lo, iv.hi, c))

    def global_ramp(x: float) -> float:
        # primitive of the piecewise-constant mean-rate profile, from 0
        lo_q, hi_q = (0.0, x) if x >= 0.0 else (x, 0.0)
        s = math.fsum(
            c * (min(hi, hi_q) - max(lo, lo_q))
            for lo, hi, c in flat
            if min(hi, hi_q) > max(lo, lo_q)
        )
        return s if x >= 0.0 else -s

    parts1 = []
    for part, iv, c in zip(f.parts, config.intervals, c1):
        scale = iv.scale
        # local primitive of (u - c) from the natural base point: a finite
        # endpoint when one exists, the anchor on the whole line
        if math.isfinite(iv.lo):
            base = iv.lo
        elif math.isfinite(iv.hi):
            base = iv.hi
        else:
            base = scale.e
        lo_q, hi_q = (base, scale.e) if scale.e >= base else (scale.e, base)
        local = math.fsum(
            (u - c) * (min(hi, hi_q) - max(lo, lo_q))
            for lo, hi, u, _ in part.pieces
            if min(hi, hi_q) > max(lo, lo_q)
        )
        if scale.e < base:
            local = -local
        anchor1 = local + global_ramp(scale.e)
        pieces1 = tuple((lo, hi, u, 0.0) for lo, hi, u, _ in part.pieces)
        parts1.append(IntervalPart(anchor1, pieces1))

    shift = parts1[0].anchor_value
    parts1 = [IntervalPart(p.anchor_value - shift, p.pieces) for p in parts1]
    f1 = PiecewiseFn(config, tuple(parts1))

    parts2 = tuple(
        IntervalPart(
            pf.anchor_value - p1.anchor_value,
            tuple((lo, hi, 0.0, w) for lo, hi, _, w in pf.pieces),
        )
        for pf, p1 in zip(f.parts, parts1)
    )
    return f1, PiecewiseFn(config, parts2)


# -- Cantor-type interpolant ---------------------------------------------------


@dataclass(frozen=True)
class CantorInterpolant:
    """Non-increasing staircase: 1 at lo, 0 at hi, constant on each plateau."""

    lo: float
    hi: float
    plateaus: tuple[tuple[float, float, Fraction], ...]

    def plateau_value(self, lo: float, hi: float) -> Fraction:
        for plo, phi, v in self.plateaus:
            if plo <= lo and hi <= phi:
                return v
        raise KeyError(f"({lo}, {hi}) is not inside a plateau")

    def eval(self, x: float) -> float:
        """Plateau value where defined, linear between plateaus elsewhere."""
        if not self.lo <= x <= self.hi:
            raise ValueError(f"{x} outside [{self.lo}, {self.hi}]")
        left_v, left_x = Fraction(1), self.lo
        right_v, right_x = Fraction(0), self.hi
        for plo, phi, v in self.plateaus:
            if plo <= x <= phi:
                return float(v)
            if phi < x and phi >= left_x:
                left_v, left_x = v, phi
            if plo > x and plo <= right_x:
                right_v, right_x = v, plo
        if right_x == left_x:
            return float(left_v)
        frac = (x - left_x) / (right_x - left_x)
        return float(left_v) + frac * (float(right_v) - float(left_v))

    __call__ = eval


def cantor_interpolant(
    lo: float, hi: float, intervals: list[tuple[float, float]]
) -> CantorInterpolant:
    """Assign plateau values by monotone refinement, widest interval first.

    Each interval receives the average of its nearest already-assigned
    neighbors, with virtual values 1 at lo and 0 at hi.  On the
    middle-thirds family this reproduces the mirrored Cantor function; the
    averaging rule keeps the assignment non-increasing for any disjoint
    family, which the literal dyadic-counter formula does not.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    cells = sorted(intervals)
    for (alo, ahi), (blo, bhi) in zip(cells, cells[1:]):
        if ahi > blo:
            raise ValueError(f"intervals ({alo}, {ahi}) and ({blo}, {bhi}) overlap")
    for clo, chi in cells:
        if clo < lo or chi > hi or not clo < chi:
            raise ValueError(f"interval ({clo}, {chi}) outside [{lo}, {hi}]")

    order = sorted(cells, key=lambda c: (-(c[1] - c[0]), c[0]))
    assigned: list[tuple[float, float, Fraction]] = []
    for clo, chi in order:
        left = Fraction(1)
        right = Fraction(0)
        for plo, phi, v in assigned:
            if phi <= clo:
                left = v
            if plo >= chi:
                right = v
                break
        value = (left + right) / 2
        pos = sum(1 for plo, _, _ in assigned if plo < clo)
        assigned.insert(pos, (clo, chi, value))
    return CantorInterpolant(lo, hi, tuple(assigned))


# -- compensators --------------------------------------------------------------


@dataclass(frozen=True)
class CompensatorResult:
    """Boundary patch with a certified smallness bound.

    ``e1_bound`` dominates form energy plus squared L2 norm; the deep-stack
    case is parameterized in scale coordinates because its x-breakpoints can
    lie closer to the boundary than float spacing allows.
    """

    case: str
    boundary: float
    height: float
    e1_bound: float
    budget: float
    support: tuple[float, float]
    _eval: object

    def eval(self, x: float) -> float:
        return self._eval(x)

    __call__ = eval

    def certified(self) -> bool:
        return self.e1_bound < self.budget


def _zero_compensator(case, c, eps, n) -> CompensatorResult:
    return CompensatorResult(case, c, 0.0, 0.0, eps / (2 * n), (c, c), lambda x: 0.0)


def _open_boundary(scale: ScaleFunction, c, h, eps, n) -> CompensatorResult:
    at_lo = c == scale.lo and scale.stack_lo
    at_hi = c == scale.hi and scale.stack_hi
    if not (at_lo or at_hi):
        raise ValueError(
            "open-boundary compensator needs an excluded stacked endpoint at c"
        )
    # footprint small enough that the L2 term costs at most eps/(8n), and a
    # scale-length run long enough that the ramp energy costs eps/(16n)
    width = eps / (8 * n * h * h)
    other = scale.hi if at_lo else scale.lo
    if math.isfinite(other):
        width = min(width, abs(other - c) / 2)
    ramp_len = 8 * h * h * n / eps
    if at_lo:
        edge = c + width
        t_edge = scale.eval(edge)
        t_full = t_edge - ramp_len

        def phi(x: float) -> float:
            if x < c or x > edge:
                return h if x == c else 0.0
            tx = scale.eval(x)
            if tx <= t_full:
                return h
            return h * (t_edge - tx) / ramp_len

        support = (c, edge)
    else:
        edge = c - width
        t_edge = scale.eval(edge)
        t_full = t_edge + ramp_len

        def phi(x: float) -> float:
            if x > c or x < edge:
                return h if x == c else 0.0
            tx = scale.eval(x)
            if tx >= t_full:
                return h
            return h * (tx - t_edge) / ramp_len

        support = (edge, c)
    form_term = 0.5 * h * h / ramp_len
    l2_term = h * h * width
    bound = form_term + l2_term
    return CompensatorResult("open-boundary", c, h, bound, eps / (2 * n), support, phi)


def _cantor_plateau(c, h, eps, n, beta, intervals, depth) -> CompensatorResult:
    if beta is None:
        raise ValueError("cantor-plateau compensator needs beta")
    if intervals is None:
        intervals = [
            (c + beta * float(glo), c + beta * float(ghi)) for _, glo, ghi, _ in iter_gaps(depth)
        ]
    interp = cantor_interpolant(c, c + beta, intervals)

    def phi(x: float) -> float:
        if not c <= x <= c + beta:
            return 0.0
        return h * interp.eval(x)

    # constant on every state-space cell, so the form energy vanishes and
    # only the L2 mass over the cells remains
    l2 = math.fsum(float(v) ** 2 * (phi_hi - plo) for plo, phi_hi, v in interp.plateaus)
    bound = h * h * l2
    budget = eps / (2 * n)
    if bound >= budget:
        raise ValueError(
            f"support too wide: L2 bound {bound:.6g} is not below {budget:.6g};"
            " shrink beta"
        )
    return CompensatorResult(
        "cantor-plateau", c, h, bound, budget, (c, c + beta), phi
    )


def compensator(
    case: str,
    scale: ScaleFunction | None,
    c: float,
    h: float,
    eps: float,
    n: int,
    beta: float | None = None,
    intervals: list[tuple[float, float]] | None = None,
    depth: int = 8,
) -> CompensatorResult:
    """Patch of height h at c whose combined energy stays below eps/(2n).

    'open-boundary' rides the scale into a boundary stack, so it needs the
    scale; 'cantor-plateau' is a scaled staircase over a closed-interval
    family of total width beta.
    """
    if eps <= 0 or n < 1:
        raise ValueError("need eps > 0 and n >= 1")
    if h < 0:
        raise ValueError("need h >= 0")
    if case == "open-boundary":
        if h == 0.0:
            return _zero_compensator(case, c, eps, n)
        if scale is None:
            raise ValueError("open-boundary compensator needs the scale")
        return _open_boundary(scale, c, h, eps, n)
    if case == "cantor-plateau":
        if h == 0.0:
            return _zero_compensator(case, c, eps, n)
        return _cantor_plateau(c, h, eps, n, beta, intervals, depth)
    raise ValueError("case must be 'open-boundary' or 'cantor-plateau'")
