"""Middle-thirds Cantor machinery with exact rational arithmetic.

The standard Cantor function ``C`` on [0, 1] is evaluated by consuming
ternary digits: digits 0 and 2 emit binary digits 0 and 1; the first
digit 1 emits a final binary 1 and stops.  Inputs are converted to
`fractions.Fraction`, so every float is handled exactly (floats are
dyadic rationals).  Rational inputs whose ternary expansion cycles are
resolved in closed form by remainder-cycle detection, which makes values
such as C(1/4) = 1/3 exact rather than truncated.

A :class:`CantorBlock` places a scaled copy of ``C`` on an interval
[lo, hi] with total singular mass ``weight``.  Blocks are the only
singular component used by scale functions; their plateau structure
(the middle-thirds gaps) is enumerable level by level, which keeps gap
bookkeeping exact at every truncation depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

__all__ = [
    "cantor_fraction",
    "cantor_eval",
    "cantor_integral",
    "iter_gaps",
    "iter_remnants",
    "CantorBlock",
]

# Digit budget when a rational's ternary expansion neither terminates nor
# cycles within reach (huge denominators).  Truncation error is 2**-_DIGIT_CAP.
_DIGIT_CAP = 256

# Denominators up to this bound get full cycle detection, hence exact values.
_CYCLE_DENOM_LIMIT = 10**6


def _bits_value(bits: list[int]) -> Fraction:
    value = Fraction(0)
    for i, b in enumerate(bits):
        if b:
            value += Fraction(1, 2 ** (i + 1))
    return value


def cantor_fraction(x, depth: int | None = None) -> Fraction:
    """Standard Cantor function C(x) on [0, 1] as an exact Fraction.

    Parameters
    ----------
    x : real
        Point in [0, 1]; floats are converted exactly.
    depth : int, optional
        If given, consume at most ``depth`` ternary digits and return the
        truncated (lower) value, accurate to 2**-depth.  If omitted the
        expansion is resolved exactly whenever it terminates, hits a
        digit 1, or cycles within the denominator budget.

    Raises
    ------
    ValueError
        If x lies outside [0, 1].
    """
    rem = Fraction(x)
    if rem < 0 or rem > 1:
        raise ValueError(f"cantor_fraction: x={x} outside [0, 1]")
    if rem == 1:
        return Fraction(1)

    exact = depth is None
    if exact:
        limit = rem.denominator + 2 if rem.denominator <= _CYCLE_DENOM_LIMIT else _DIGIT_CAP
    else:
        limit = depth

    bits: list[int] = []
    seen: dict[Fraction, int] = {}
    k = 0
    while rem != 0 and k < limit:
        if exact:
            if rem in seen:
                # Ternary expansion cycles: bits[j:] repeat forever.
                j = seen[rem]
                prefix = _bits_value(bits[:j])
                cycle = _bits_value(bits[j:])
                period = k - j
                return prefix + cycle * Fraction(2**period, 2**period - 1) / 2**j
            seen[rem] = k
        rem *= 3
        digit = int(rem)
        rem -= digit
        if digit == 1:
            bits.append(1)
            return _bits_value(bits)
        bits.append(digit // 2)
        k += 1
    return _bits_value(bits)


def cantor_eval(x, depth: int | None = None) -> float:
    """Standard Cantor function C(x) on [0, 1] as a float."""
    return float(cantor_fraction(x, depth))


def cantor_integral(x: float, depth: int = 40) -> float:
    """Integral of the Cantor function, ∫_0^x C(y) dy, for x in [0, 1].

    Uses the self-similar splitting S(x) = S(3x)/6 on the left third,
    the exact plateau formula on the middle, and S(x) = 1/4 + (x-2/3)/2
    + S(3x-2)/6 on the right.  Recurses ``depth`` levels; the truncation
    error is at most 6**-depth / 4.
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 0.5
    acc = 0.0
    mult = 1.0
    for _ in range(depth):
        if x <= 1.0 / 3.0:
            mult /= 6.0
            x *= 3.0
        elif x < 2.0 / 3.0:
            return acc + mult * (1.0 / 12.0 + (x - 1.0 / 3.0) / 2.0)
        else:
            acc += mult * (0.25 + (x - 2.0 / 3.0) / 2.0)
            mult /= 6.0
            x = 3.0 * x - 2.0
        if x <= 0.0:
            return acc
        if x >= 1.0:
            return acc + mult * 0.5
    return acc + mult * 0.25


def _prefix_point(idx: int, ndigits: int) -> tuple[Fraction, Fraction]:
    """Left endpoint and Cantor value after ``ndigits`` ternary digits taken
    from the bits of ``idx`` (most significant bit first, 1 -> digit 2)."""
    lo = Fraction(0)
    value = Fraction(0)
    for i in range(ndigits):
        bit = (idx >> (ndigits - 1 - i)) & 1
        if bit:
            lo += Fraction(2, 3 ** (i + 1))
            value += Fraction(1, 2 ** (i + 1))
    return lo, value


def iter_gaps(depth: int) -> Iterator[tuple[int, Fraction, Fraction, Fraction]]:
    """Yield middle-thirds gaps of [0, 1] at levels 1..depth.

    Each item is ``(level, lo, hi, value)`` in unit-interval coordinates,
    where ``value`` is the constant the Cantor function takes on the gap.
    Gaps appear level by level, left to right within a level; across all
    levels up to d the values are exactly {j/2^d : 1 <= j < 2^d}.
    """
    for level in range(1, depth + 1):
        length = Fraction(1, 3**level)
        for idx in range(2 ** (level - 1)):
            lo, value = _prefix_point(idx, level - 1)
            yield level, lo + length, lo + 2 * length, value + Fraction(1, 2**level)


def iter_remnants(depth: int) -> Iterator[tuple[Fraction, Fraction, Fraction]]:
    """Yield the 2**depth closed level-``depth`` pieces left after removing
    all gaps of level <= depth, as ``(lo, hi, value_lo)`` with ``value_lo``
    the Cantor value at the left edge.  Pieces have length 3**-depth."""
    length = Fraction(1, 3**depth)
    for idx in range(2**depth):
        lo, value = _prefix_point(idx, depth)
        yield lo, lo + length, value


@dataclass(frozen=True)
class CantorBlock:
    """A scaled Cantor staircase on [lo, hi] carrying singular mass ``weight``.

    The associated Stieltjes mass of [lo, x] is ``weight * C((x-lo)/(hi-lo))``;
    it is non-atomic, lives on the middle-thirds Cantor set of the block, and
    vanishes on every removed gap.
    """

    lo: Fraction
    hi: Fraction
    weight: Fraction

    def __init__(self, lo, hi, weight=1):
        lo = Fraction(lo)
        hi = Fraction(hi)
        weight = Fraction(weight)
        if not lo < hi:
            raise ValueError(f"CantorBlock: need lo < hi, got [{lo}, {hi}]")
        if weight <= 0:
            raise ValueError(f"CantorBlock: weight must be positive, got {weight}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "weight", weight)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def value_exact(self, x, depth: int | None = None) -> Fraction:
        """Mass of [lo, x]: weight * C((x-lo)/width), clipped outside."""
        fx = Fraction(x)
        if fx <= self.lo:
            return Fraction(0)
        if fx >= self.hi:
            return self.weight
        return self.weight * cantor_fraction((fx - self.lo) / self.width, depth)

    def value(self, x, depth: int | None = None) -> float:
        return float(self.value_exact(x, depth))

    def mass_exact(self, u, v, depth: int | None = None) -> Fraction:
        """Singular mass of (u, v] under this block (order-normalized)."""
        if u > v:
            u, v = v, u
        return self.value_exact(v, depth) - self.value_exact(u, depth)

    def mass(self, u, v, depth: int | None = None) -> float:
        return float(self.mass_exact(u, v, depth))

    def integral(self, u: float, v: float, depth: int = 48) -> float:
        """∫_u^v weight * C((y-lo)/width) dy, clipped to the block."""
        lo = float(self.lo)
        hi = float(self.hi)
        w = float(self.weight)
        width = float(self.width)
        if v < u:
            raise ValueError("CantorBlock.integral: need u <= v")
        above = max(0.0, v - max(u, hi))  # portion right of the block: C = 1 there
        a = min(max(u, lo), hi)
        b = min(max(v, lo), hi)
        inner = 0.0
        if b > a:
            sa = cantor_integral((a - lo) / width, depth)
            sb = cantor_integral((b - lo) / width, depth)
            inner = width * (sb - sa)
        return w * (inner + above)

    def gaps(self, depth: int) -> list[tuple[int, Fraction, Fraction, Fraction]]:
        """Materialized gaps up to ``depth`` in absolute coordinates.

        Returns ``(level, lo, hi, mass_value)`` where ``mass_value`` is the
        block mass of [block.lo, gap] (constant across the gap)."""
        out = []
        for level, glo, ghi, val in iter_gaps(depth):
            out.append(
                (level, self.lo + glo * self.width, self.lo + ghi * self.width, self.weight * val)
            )
        return out

    def remnants(self, depth: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        """Closed level-``depth`` pieces in absolute coordinates, with the
        block mass value at each piece's left edge."""
        out = []
        for rlo, rhi, val in iter_remnants(depth):
            out.append((self.lo + rlo * self.width, self.lo + rhi * self.width, self.weight * val))
        return out
