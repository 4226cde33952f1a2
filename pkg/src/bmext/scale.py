"""Singular scale functions on an interval.

A scale function here is strictly increasing and continuous on an interval
I = <lo, hi> with

    t(x) = (x - e) + (signed singular mass between e and x),

where the singular part is carried by middle-thirds Cantor blocks.  By
construction Lebesgue measure is absolutely continuous with respect to dt
with density 1 off the blocks' Cantor sets and 0 on them, t(e) = 0, and t
diverges exactly at the endpoints that do not belong to I:

* an infinite endpoint diverges through the identity part;
* a finite excluded endpoint carries a boundary stack, an infinite family
  of unit-weight blocks piled on dyadic shells accumulating at the
  endpoint, so the mass between the endpoint and any interior point is
  infinite;
* a finite included endpoint carries no stack and gets a finite value.

The anchor e is fixed by the interval shape: the midpoint when both
endpoints are finite, lo + 1 or hi - 1 when exactly one is, and 0 on the
whole line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .cantor import CantorBlock, cantor_fraction, cantor_integral

__all__ = ["ScaleFunction", "make_scale", "anchor_point"]

# Stack shells with index >= this bound are never materialized individually;
# geometry below 2**-60 of the shell width is beyond double resolution anyway.
_STACK_ENUM_CAP = 60


def anchor_point(lo: float, hi: float) -> float:
    """Anchor e for the interval <lo, hi>: midpoint, lo+1, hi-1, or 0."""
    lo_fin = math.isfinite(lo)
    hi_fin = math.isfinite(hi)
    if lo_fin and hi_fin:
        return (lo + hi) / 2.0
    if lo_fin:
        return lo + 1.0
    if hi_fin:
        return hi - 1.0
    return 0.0


@dataclass(frozen=True)
class _Stack:
    """Boundary stack of unit blocks on dyadic shells at a finite endpoint.

    For a left stack at ``a`` with width ``delta`` the k-th shell is
    [a + delta/2**(k+1), a + delta/2**k], k >= 0; a right stack mirrors
    this at ``b``.  Every shell carries a unit-weight Cantor block, so the
    mass trapped between the endpoint and any interior point is infinite.
    """

    side: str  # "lo" or "hi"
    at: Fraction
    delta: Fraction

    def shell(self, k: int) -> CantorBlock:
        if self.side == "lo":
            lo = self.at + self.delta / 2 ** (k + 1)
            return CantorBlock(lo, self.at + self.delta / 2**k, 1)
        hi = self.at - self.delta / 2 ** (k + 1)
        return CantorBlock(self.at - self.delta / 2**k, hi, 1)

    def _shell_index(self, r: Fraction) -> int:
        """Index k with 1/2**(k+1) < r <= 1/2**k for r in (0, 1]."""
        k = max(0, int(-math.log2(float(r))) - 1)
        while Fraction(1, 2**k) < r:
            k -= 1
        while r <= Fraction(1, 2 ** (k + 1)):
            k += 1
        return k

    def mass_to_edge(self, x, depth: int | None = None) -> Fraction | float:
        """Stack mass between ``x`` and the interior edge of the stack zone.

        This is the stack's contribution to the mass between x and the
        anchor; it is infinite exactly when x sits at the stacked endpoint.
        """
        fx = Fraction(x)
        if self.side == "lo":
            if fx <= self.at:
                return math.inf
            r = (fx - self.at) / self.delta
        else:
            if fx >= self.at:
                return math.inf
            r = (self.at - fx) / self.delta
        if r >= 1:
            return Fraction(0)
        k = self._shell_index(r)
        blk = self.shell(k)
        if self.side == "lo":
            partial = blk.weight - blk.value_exact(fx, depth)
        else:
            partial = blk.value_exact(fx, depth)
        return k + partial

    def mass_between(self, u, v, depth: int | None = None) -> Fraction | float:
        """Stack mass in (u, v), u <= v, both on the interval side."""
        mu = self.mass_to_edge(u, depth)
        mv = self.mass_to_edge(v, depth)
        if self.side == "lo":
            near, far = mu, mv
        else:
            near, far = mv, mu
        if near == math.inf:
            return math.inf if far != math.inf else Fraction(0)
        return near - far

    def integral_mass(self, u: float, v: float) -> float:
        """∫_u^v (stack mass between y and the interior edge) dy.

        The cell [u, v] must stay strictly away from the stacked endpoint.
        """
        at = float(self.at)
        delta = float(self.delta)
        if self.side == "lo":
            if u <= at:
                raise ValueError("stack integral: cell touches the stacked endpoint")
            lo_z, hi_z = at, at + delta
            nearest = max(u, lo_z)
            r = (Fraction(nearest) - self.at) / self.delta
        else:
            if v >= at:
                raise ValueError("stack integral: cell touches the stacked endpoint")
            lo_z, hi_z = at - delta, at
            nearest = min(v, hi_z)
            r = (self.at - Fraction(nearest)) / self.delta
        a = max(u, lo_z)
        b = min(v, hi_z)
        if b <= a:
            return 0.0
        deepest = self._shell_index(min(r, Fraction(1)))
        total = 0.0
        for k in range(deepest + 1):
            blk = self.shell(k)
            c = max(a, float(blk.lo))
            d = min(b, float(blk.hi))
            if d <= c:
                continue
            if self.side == "lo":
                # mass(y) = k + 1 - C_k(y) on shell k
                total += (k + 1) * (d - c) - blk.integral(c, d)
            else:
                # mass(y) = k + C_k(y) on shell k
                total += k * (d - c) + blk.integral(c, d)
        return total


@dataclass(frozen=True)
class ScaleFunction:
    """Scale function on <lo, hi> built from Cantor blocks and stacks.

    Use :func:`make_scale` to construct one; it normalizes arguments and
    enforces the divergence rules at the endpoints.
    """

    lo: float
    hi: float
    include_lo: bool
    include_hi: bool
    blocks: tuple[CantorBlock, ...]
    stack_lo: bool
    stack_hi: bool
    e: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "e", anchor_point(self.lo, self.hi))
        self._validate()

    def _validate(self):
        lo, hi = self.lo, self.hi
        if not lo < hi:
            raise ValueError(f"scale interval: need lo < hi, got <{lo}, {hi}>")
        if self.include_lo and not math.isfinite(lo):
            raise ValueError("scale interval: cannot include an infinite endpoint")
        if self.include_hi and not math.isfinite(hi):
            raise ValueError("scale interval: cannot include an infinite endpoint")
        # divergence at an endpoint iff the endpoint is excluded
        if math.isfinite(lo):
            if self.include_lo and self.stack_lo:
                raise ValueError("included endpoint must keep a finite scale value; drop the stack")
            if not self.include_lo and not self.stack_lo:
                raise ValueError(
                    "excluded finite endpoint needs a boundary stack so the scale diverges there"
                )
        elif self.stack_lo:
            raise ValueError("boundary stack is meaningless at an infinite endpoint")
        if math.isfinite(hi):
            if self.include_hi and self.stack_hi:
                raise ValueError("included endpoint must keep a finite scale value; drop the stack")
            if not self.include_hi and not self.stack_hi:
                raise ValueError(
                    "excluded finite endpoint needs a boundary stack so the scale diverges there"
                )
        elif self.stack_hi:
            raise ValueError("boundary stack is meaningless at an infinite endpoint")

        zones = []
        if self.stack_lo:
            s = self._left_stack()
            zones.append((self.lo, float(s.at + s.delta)))
        if self.stack_hi:
            s = self._right_stack()
            zones.append((float(s.at - s.delta), self.hi))
        prev_hi = None
        for blk in self.blocks:
            blo, bhi = float(blk.lo), float(blk.hi)
            if blo < self.lo or bhi > self.hi:
                raise ValueError(f"block [{blo}, {bhi}] leaves the interval <{self.lo}, {self.hi}>")
            if prev_hi is not None and blo < prev_hi:
                raise ValueError("blocks must be sorted with disjoint interiors")
            prev_hi = bhi
            for zlo, zhi in zones:
                if blo < zhi and bhi > zlo:
                    raise ValueError(
                        f"block [{blo}, {bhi}] overlaps the boundary-stack zone [{zlo}, {zhi}]"
                    )

    # -- stacks ---------------------------------------------------------

    def _left_stack(self) -> _Stack:
        delta = min(Fraction(1), (Fraction(self.e) - Fraction(self.lo)) / 2)
        return _Stack("lo", Fraction(self.lo), delta)

    def _right_stack(self) -> _Stack:
        delta = min(Fraction(1), (Fraction(self.hi) - Fraction(self.e)) / 2)
        return _Stack("hi", Fraction(self.hi), delta)

    def stacks(self) -> list[_Stack]:
        out = []
        if self.stack_lo:
            out.append(self._left_stack())
        if self.stack_hi:
            out.append(self._right_stack())
        return out

    # -- membership -----------------------------------------------------

    def contains(self, x: float) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo:
            return self.include_lo
        if x == self.hi:
            return self.include_hi
        return True

    def _check_in_closure(self, x: float):
        if x < self.lo or x > self.hi or not math.isfinite(x):
            raise ValueError(f"x={x} outside the interval <{self.lo}, {self.hi}>")

    # -- singular mass and evaluation ------------------------------------

    def _singular_exact(self, u, v, depth: int | None = None) -> Fraction | float:
        """Exact W-mass (blocks plus stacks) strictly between u and v (u <= v)."""
        total: Fraction | float = Fraction(0)
        for blk in self.blocks:
            total += blk.mass_exact(u, v, depth)
        for s in self.stacks():
            m = s.mass_between(u, v, depth)
            if m == math.inf:
                return math.inf
            total += m
        return total

    def singular_between(self, u, v, depth: int | None = None) -> float:
        """Total W-mass (blocks plus stacks) strictly between u and v."""
        if u > v:
            u, v = v, u
        self._check_in_closure(float(u))
        self._check_in_closure(float(v))
        m = self._singular_exact(Fraction(u), Fraction(v), depth)
        return m if m == math.inf else float(m)

    def eval(self, x, depth: int | None = None) -> float:
        """Scale value t(x); signed infinity at excluded finite endpoints.

        Accepts floats or Fractions; all arithmetic is exact until the final
        rounding, so rational breakpoints evaluate to correctly rounded values.
        """
        if x == self.lo and not self.include_lo:
            return -math.inf
        if x == self.hi and not self.include_hi:
            return math.inf
        self._check_in_closure(float(x))
        fx = Fraction(x)
        fe = Fraction(self.e)
        if fx == fe:
            return 0.0
        sing = self._singular_exact(min(fx, fe), max(fx, fe), depth)
        if fx > fe:
            return float(fx - fe + sing)
        return float(fx - fe - sing)

    __call__ = eval

    def boundary_value(self, side: str) -> float:
        """Limit of t at an endpoint: finite iff the endpoint is included."""
        if side == "lo":
            if not math.isfinite(self.lo) or self.stack_lo:
                return -math.inf
            return self.eval(self.lo)
        if side == "hi":
            if not math.isfinite(self.hi) or self.stack_hi:
                return math.inf
            return self.eval(self.hi)
        raise ValueError("side must be 'lo' or 'hi'")

    def stieltjes_mass(self, u: float, v: float) -> float:
        """dt-mass of (u, v] inside the interval, possibly infinite."""
        tv = self.eval(v)
        tu = self.eval(u)
        return tv - tu

    def uw_split(self, u: float, v: float, depth: int = 24) -> tuple[float, float]:
        """Split dt((u, v]) into its Lebesgue and singular parts.

        The singular part is evaluated with Cantor expansions truncated at
        ``depth`` digits, so it is accurate to 2**-depth per block touched.
        """
        if u > v:
            u, v = v, u
        return v - u, self.singular_between(u, v, depth)

    # -- inversion --------------------------------------------------------

    def inverse(self, y: float, tol: float = 1e-9) -> float:
        """Solve t(x) = y by monotone bisection to |t(x) - y| <= tol*(1+|y|).

        Because dt dominates Lebesgue measure, the returned x is within the
        same tolerance of the true preimage.
        """
        if not math.isfinite(y):
            raise ValueError("inverse: y must be finite")
        target_tol = tol * (1.0 + abs(y))
        x_lo, x_hi = self._bracket(y)
        t_lo, t_hi = self.eval(x_lo), self.eval(x_hi)
        if y < t_lo - target_tol or y > t_hi + target_tol:
            raise ValueError(f"inverse: y={y} outside the scale range [{t_lo}, {t_hi}]")
        for _ in range(200):
            mid = 0.5 * (x_lo + x_hi)
            if mid <= x_lo or mid >= x_hi:
                break
            tm = self.eval(mid)
            if abs(tm - y) <= target_tol:
                return mid
            if tm < y:
                x_lo = mid
            else:
                x_hi = mid
        return 0.5 * (x_lo + x_hi)

    def _bracket(self, y: float) -> tuple[float, float]:
        e = self.e
        if y >= 0.0:
            x_lo = e
            if math.isfinite(self.hi):
                if self.include_hi:
                    return x_lo, self.hi
                # walk dyadically into the stack until the scale passes y
                x = 0.5 * (e + self.hi)
                for _ in range(4000):
                    if self.eval(x) >= y:
                        return x_lo, x
                    nxt = 0.5 * (x + self.hi)
                    if nxt <= x or nxt >= self.hi:
                        break
                    x = nxt
                raise ValueError(f"inverse: y={y} not reachable within double precision")
            step = 1.0
            x = e + step
            for _ in range(200):
                if self.eval(x) >= y:
                    return x_lo, x
                step *= 2.0
                x = e + step
            raise ValueError(f"inverse: y={y} not bracketed")
        x_hi = e
        if math.isfinite(self.lo):
            if self.include_lo:
                return self.lo, x_hi
            x = 0.5 * (self.lo + e)
            for _ in range(4000):
                if self.eval(x) <= y:
                    return x, x_hi
                nxt = 0.5 * (self.lo + x)
                if nxt <= self.lo or nxt >= x:
                    break
                x = nxt
            raise ValueError(f"inverse: y={y} not reachable within double precision")
        step = 1.0
        x = e - step
        for _ in range(200):
            if self.eval(x) <= y:
                return x, x_hi
            step *= 2.0
            x = e - step
        raise ValueError(f"inverse: y={y} not bracketed")

    # -- integrals for holding times --------------------------------------

    def integral_t(self, u: float, v: float) -> float:
        """∫_u^v t(y) dy on a cell with u <= v strictly inside the interval."""
        if u > v:
            raise ValueError("integral_t: need u <= v")
        self._check_in_closure(u)
        self._check_in_closure(v)
        e = self.e
        total = 0.5 * (v * v - u * u) - e * (v - u)
        for blk in self.blocks:
            # signed mass from e is blockvalue(y) - blockvalue(e)
            total += blk.integral(u, v) - blk.value(e) * (v - u)
        if self.stack_lo:
            total -= self._left_stack().integral_mass(u, v)
        if self.stack_hi:
            total += self._right_stack().integral_mass(u, v)
        return total

    # -- W-support enumeration --------------------------------------------

    def w_supports(self, stack_shells: int = 24) -> list[CantorBlock]:
        """Blocks carrying the singular mass, sorted by position.

        Stacks contribute their first ``stack_shells`` shells; deeper shells
        remain unmaterialized (they hug the excluded endpoint).
        """
        out = list(self.blocks)
        shells = min(stack_shells, _STACK_ENUM_CAP)
        if self.stack_lo:
            out.extend(self._left_stack().shell(k) for k in range(shells))
        if self.stack_hi:
            out.extend(self._right_stack().shell(k) for k in range(shells))
        return sorted(out, key=lambda b: b.lo)

    def total_block_weight(self) -> float:
        """Total weight of the explicit blocks (stacks are infinite)."""
        if self.stack_lo or self.stack_hi:
            return math.inf
        return float(sum((b.weight for b in self.blocks), Fraction(0)))


def make_scale(
    lo: float,
    hi: float,
    include_lo: bool = False,
    include_hi: bool = False,
    blocks=(),
    stack_lo: bool | None = None,
    stack_hi: bool | None = None,
) -> ScaleFunction:
    """Build a valid scale function on <lo, hi>.

    Stacks default to exactly where the divergence rules require them:
    present at a finite excluded endpoint, absent otherwise.  Pass
    ``stack_lo``/``stack_hi`` explicitly only to provoke validation errors.
    ``blocks`` may be CantorBlock instances or (lo, hi, weight) triples.
    """
    norm = []
    for blk in blocks:
        if not isinstance(blk, CantorBlock):
            blk = CantorBlock(*blk)
        norm.append(blk)
    norm.sort(key=lambda b: b.lo)
    if stack_lo is None:
        stack_lo = math.isfinite(lo) and not include_lo
    if stack_hi is None:
        stack_hi = math.isfinite(hi) and not include_hi
    return ScaleFunction(
        lo=float(lo),
        hi=float(hi),
        include_lo=bool(include_lo),
        include_hi=bool(include_hi),
        blocks=tuple(norm),
        stack_lo=stack_lo,
        stack_hi=stack_hi,
    )
