import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmext.cantor import CantorBlock
from bmext.scale import anchor_point, make_scale


def ex215_scale():
    """Whole-line scale t(x) = x + C(x) with a unit block on [0, 1]."""
    return make_scale(-math.inf, math.inf, blocks=[(0, 1, 1)])


def test_anchor_rule():
    assert anchor_point(0.0, 1.0) == 0.5
    assert anchor_point(-math.inf, 2.0) == 1.0
    assert anchor_point(-3.0, math.inf) == -2.0
    assert anchor_point(-math.inf, math.inf) == 0.0


def test_whole_line_eval():
    t = ex215_scale()
    assert t.e == 0.0
    assert t(0.0) == 0.0
    assert t(1.0) == 2.0
    assert t(Fraction(1, 3)) == float(Fraction(5, 6))
    assert t(0.25) == float(Fraction(1, 4) + Fraction(1, 3))  # 0.25 is exactly 1/4
    assert t(-3.0) == -3.0
    assert t(7.5) == 8.5


def test_eval_monotone_strict():
    t = ex215_scale()
    xs = [i / 37.0 - 0.3 for i in range(60)]
    vals = [t(x) for x in xs]
    for a, b in zip(vals, vals[1:]):
        assert a < b


def test_lebesgue_dominated_by_dt():
    t = ex215_scale()
    for u, v in [(-1.0, 0.5), (0.1, 0.9), (0.4, 0.45), (0.9, 3.0)]:
        assert t.stieltjes_mass(u, v) >= (v - u) - 1e-15


def test_uw_split():
    t = ex215_scale()
    leb, sing = t.uw_split(0.0, Fraction(1, 3))
    assert leb == 1.0 / 3.0
    assert abs(sing - 0.5) < 1e-7  # depth-24 truncation
    leb, sing = t.uw_split(0.0, Fraction(1, 3), depth=50)
    assert abs(sing - 0.5) < 1e-15
    # exact evaluation through the full mass
    assert t.singular_between(0.0, 1.0) == 1.0
    # split accounting matches the Stieltjes mass to depth accuracy
    for u, v in [(0.0, 0.7), (-1.0, 2.0), (0.2, 0.3)]:
        leb, sing = t.uw_split(u, v, depth=40)
        assert abs((leb + sing) - t.stieltjes_mass(u, v)) < 1e-11


def test_inverse_round_trip():
    t = ex215_scale()
    assert abs(t.inverse(1.0) - 0.5) < 1e-9
    for x in [-2.0, -0.1, 0.2, 1.0 / 3.0, 0.77, 1.0, 4.5]:
        y = t(x)
        assert abs(t.inverse(y, tol=1e-10) - x) <= 1e-10 * (1.0 + abs(y))


def test_breakpoints_of_t_exact():
    # plateau endpoints of the unit block map to exact dyadic-plus-identity values
    t = ex215_scale()
    assert t(Fraction(1, 3)) == float(Fraction(1, 3) + Fraction(1, 2))
    assert t(Fraction(2, 3)) == float(Fraction(2, 3) + Fraction(1, 2))
    assert t(Fraction(1, 9)) == float(Fraction(1, 9) + Fraction(1, 4))


def test_included_endpoint_finite():
    t = make_scale(0.0, math.inf, include_lo=True)
    assert t.e == 1.0
    assert t(0.0) == -1.0
    assert t.boundary_value("lo") == -1.0
    assert t.boundary_value("hi") == math.inf


def test_excluded_endpoint_diverges_monotonically():
    t = make_scale(0.0, math.inf, include_lo=False)
    assert t.boundary_value("lo") == -math.inf
    assert t(0.0) == -math.inf
    # walking down the stack shells the scale drops without bound
    delta = 0.5  # min(1, (e - lo)/2) with e = 1
    prev = 0.0
    for k in range(1, 40):
        val = t(delta * 2.0**-k)
        assert val < prev
        prev = val
    assert prev < -30.0


def test_stack_shell_values_exact():
    # at shell boundaries the stack contributes exactly k units of mass
    t = make_scale(0.0, math.inf, include_lo=False)
    delta = 0.5
    for k in range(0, 10):
        x = delta * 2.0**-k
        # mass between x and e: k shells above x are complete, none partial
        expect = (x - 1.0) - float(k)
        assert t(x) == pytest.approx(expect, abs=1e-12)


def test_bounded_both_excluded():
    t = make_scale(0.0, 1.0)
    assert t.e == 0.5
    assert t(0.5) == 0.0
    assert t.boundary_value("lo") == -math.inf
    assert t.boundary_value("hi") == math.inf
    assert t(0.0) == -math.inf and t(1.0) == math.inf
    # inverse still lands inside
    for y in [-3.0, -1.0, 0.0, 2.5]:
        x = t.inverse(y, tol=1e-9)
        assert 0.0 < x < 1.0
        assert abs(t(x) - y) <= 1e-9 * (1.0 + abs(y))


def test_validation_rules():
    with pytest.raises(ValueError):
        make_scale(0.0, 1.0, include_lo=False, stack_lo=False, stack_hi=True)
    with pytest.raises(ValueError):
        make_scale(0.0, 1.0, include_lo=True, include_hi=True, stack_lo=True, stack_hi=False)
    with pytest.raises(ValueError):
        make_scale(-math.inf, math.inf, stack_lo=True)
    with pytest.raises(ValueError):
        make_scale(-math.inf, math.inf, include_hi=True)
    # block leaving the interval
    with pytest.raises(ValueError):
        make_scale(0.0, 1.0, include_lo=True, include_hi=True, blocks=[(0.5, 2.0, 1)])
    # overlapping blocks
    with pytest.raises(ValueError):
        make_scale(
            -math.inf, math.inf, blocks=[(0, 1, 1), (0.5, 1.5, 1)]
        )
    # block inside a stack zone
    with pytest.raises(ValueError):
        make_scale(0.0, math.inf, blocks=[(0.1, 0.2, 1)])


def test_blocks_may_touch():
    t = make_scale(-math.inf, math.inf, blocks=[(0, 1, 1), (1, 2, 1)])
    assert t.singular_between(0.0, 2.0) == 2.0


def test_stieltjes_mass_with_boundaries():
    t = make_scale(0.0, 1.0)
    assert t.stieltjes_mass(0.0, 0.5) == math.inf
    assert t.stieltjes_mass(0.5, 1.0) == math.inf
    assert math.isfinite(t.stieltjes_mass(0.25, 0.75))


def test_integral_t_against_quadrature():
    t = ex215_scale()
    for u, v in [(-1.0, 0.5), (0.2, 0.8), (0.5, 2.0)]:
        n = 2000
        riemann = sum(t(u + (v - u) * (i + 0.5) / n) for i in range(n)) * (v - u) / n
        assert abs(t.integral_t(u, v) - riemann) < 2e-3 * (1 + abs(riemann))


def test_integral_t_with_stack():
    t = make_scale(0.0, math.inf, include_lo=False)
    u, v = 0.01, 0.9
    n = 6000
    riemann = sum(t(u + (v - u) * (i + 0.5) / n) for i in range(n)) * (v - u) / n
    assert abs(t.integral_t(u, v) - riemann) < 5e-3 * (1 + abs(riemann))


def test_w_supports_sorted():
    t = make_scale(0.0, 1.0, blocks=[(0.4, 0.6, 2)])
    supports = t.w_supports(stack_shells=8)
    los = [float(b.lo) for b in supports]
    assert los == sorted(los)
    assert len(supports) == 1 + 2 * 8


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
    w=st.floats(min_value=0.25, max_value=4.0),
)
def test_round_trip_property(x, w):
    t = make_scale(-math.inf, math.inf, blocks=[CantorBlock(-1, 1, Fraction(w).limit_denominator(64))])
    y = t(x)
    back = t.inverse(y, tol=1e-9)
    assert abs(back - x) <= 1e-9 * (1.0 + abs(y)) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-6, max_value=0.999))
def test_anchor_zero_property(frac):
    # anchor value is exactly zero across interval shapes
    scales = [
        make_scale(0.0, 1.0),
        make_scale(0.0, math.inf, include_lo=True, blocks=[(2, 3, 1)]),
        make_scale(-math.inf, 0.0, include_hi=True),
        make_scale(-math.inf, math.inf, blocks=[(0, 1, 1)]),
    ]
    for t in scales:
        assert t(t.e) == 0.0
        lo = t.lo if math.isfinite(t.lo) else t.e - 3.0
        hi = t.hi if math.isfinite(t.hi) else t.e + 3.0
        x = lo + (hi - lo) * frac
        if t.contains(x) and x != t.e:
            assert (t(x) > 0.0) == (x > t.e)
