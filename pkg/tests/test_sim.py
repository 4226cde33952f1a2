"""Grid-chain approximation: transition law, holding times, Monte Carlo runs."""

import math
from fractions import Fraction

import numpy as np
import pytest

from bmext.config import ExtensionConfig, IntervalSpec, build_trace_measure, preset
from bmext.darning import darn
from bmext.scale import make_scale
from bmext.sim import (
    build_chain,
    hitting_probability,
    simulate_darned,
    simulate_path,
    simulate_trace_chain,
    snap_grid,
)

EX215 = preset("ex215")
EX216 = preset("ex216")
SOJOURN = preset("darning-sojourn")
BROWNIAN = ExtensionConfig((IntervalSpec(make_scale(-math.inf, math.inf)),), name="brownian")


# -- chain construction ------------------------------------------------------


def test_brownian_chain_is_symmetric_walk():
    chain = build_chain(BROWNIAN, 0, np.linspace(0.0, 1.0, 13))
    assert chain.p_right[1:-1] == pytest.approx(0.5, rel=1e-12)
    # mean exit time of a Brownian cell of half-width h is h**2
    assert chain.mean_holding[1:-1] == pytest.approx((1 / 12) ** 2, rel=1e-12)
    assert chain.boundary == ("absorb", "absorb")
    assert chain.absorbing[0] and chain.absorbing[-1]
    assert not chain.absorbing[1:-1].any()


def test_straddling_cell_biased_away_from_singular_mass():
    # left cell crosses half the block (dt-mass 13/12), right cell is pure
    # gap (dt-mass 1/6): the walk prefers the cheap side
    chain = build_chain(EX215, 0, [-0.25, 1 / 3, 0.5])
    assert chain.p_right[1] == pytest.approx(13 / 15, abs=1e-9)


def test_chain_rejects_sites_outside_the_interval():
    with pytest.raises(ValueError, match="straddles"):
        build_chain(SOJOURN, 0, [-2.0, -1.0])
    with pytest.raises(ValueError, match="straddles"):
        build_chain(EX216, 0, [-1.0, 0.5])
    # a dust point is complement ground but not an endpoint of this gap
    ex218 = preset("ex218", depth=4)
    gap = ex218.locate(0.5)
    with pytest.raises(ValueError, match="outside"):
        build_chain(ex218, gap, [0.25, 1 / 3, 0.5])


def test_trap_site_is_absorbing_behind_an_exact_wall():
    chain = build_chain(EX216, 0, [-1.0, -0.5, -0.25, 0.0])
    assert chain.absorbing[-1]
    # the stack piles infinite scale against 0, so the wall is exact
    assert chain.p_right[2] == 0.0
    assert math.isfinite(chain.mean_holding[2]) and chain.mean_holding[2] > 0.0
    single = build_chain(EX216, 1, [0.0])
    assert single.absorbing[0] and single.boundary == ("absorb", "absorb")


def test_included_endpoint_reflects():
    chain = build_chain(SOJOURN, 1, [-1.0, -0.5, 0.0, 0.5])
    assert chain.boundary == ("reflect", "absorb")
    assert chain.p_right[0] == 1.0
    # one-sided exit time from a reflecting cell of width h is h**2
    assert chain.mean_holding[0] == pytest.approx(0.25, rel=1e-12)


def test_snap_grid_lands_on_gap_endpoints():
    grid = snap_grid(EX215, 0, 0.0, 1.0, 24, depth=6)
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert np.all(np.diff(grid) > 0)
    for target in (1 / 3, 2 / 3, float(Fraction(1, 9)), float(Fraction(2, 9))):
        assert np.min(np.abs(grid - target)) == 0.0
    # interior points move at most half a spacing
    base = np.linspace(0.0, 1.0, 25)
    assert np.max(np.abs(grid - base)) <= 1 / 48 + 1e-15


def test_holding_times_absorb_lebesgue_speed_only():
    # a cell pair inside the dust carries singular scale but almost no
    # Lebesgue mass, so its holding collapses with depth
    prev = math.inf
    for d in (4, 6, 8):
        x1, x2 = float(Fraction(1, 3**d)), float(Fraction(2, 3**d))
        chain = build_chain(EX215, 0, [0.0, x1, x2])
        h = chain.mean_holding[1]
        assert 0.0 < h <= (2 * 3.0**-d + 2.0**-d) * 3.0**-d * (1 + 1e-9)
        assert h < prev
        prev = h
    # contrast: the big-gap cell keeps its full Brownian holding
    gap = build_chain(EX215, 0, [1 / 3, 0.5, 2 / 3])
    assert gap.mean_holding[1] == pytest.approx(1 / 36, rel=1e-6)


def test_holding_bounded_by_cell_speed_times_scale_width():
    grid = snap_grid(EX215, 0, 0.0, 1.0, 24, depth=6)
    chain = build_chain(EX215, 0, grid)
    t = [EX215.interval(0).scale.eval(s) for s in grid]
    for i in range(1, grid.size - 1):
        cap = (grid[i + 1] - grid[i - 1]) * (t[i + 1] - t[i - 1]) / 2
        assert 0.0 < chain.mean_holding[i] <= cap * (1 + 1e-9)


# -- single trajectories -----------------------------------------------------


def test_path_from_trap_has_length_one():
    chain = build_chain(EX216, 0, [-1.0, -0.5, -0.25, 0.0])
    path = simulate_path(chain, 0.0, seed=3)
    assert path.sites.tolist() == [0.0]
    assert path.times.tolist() == [0.0]
    assert not path.exhausted


def test_path_never_crosses_the_trap_wall():
    chain = build_chain(EX216, 0, [-1.0, -0.75, -0.5, -0.25, 0.0])
    path = simulate_path(chain, -0.5, budget=10_000, seed=4)
    assert path.sites.max() <= -0.25
    assert np.all(np.isin(path.sites, chain.sites))


def test_path_reflects_at_included_endpoint():
    chain = build_chain(SOJOURN, 1, [-1.0, -0.5, 0.0, 0.5])
    path = simulate_path(chain, -1.0, budget=5_000, seed=6)
    assert path.sites.min() == -1.0
    assert np.all(path.sites >= -1.0)
    assert path.sites[-1] == 0.5  # absorbed at the window edge
    assert np.all(np.diff(path.times) > 0)


def test_path_budget_exhaustion_returns_partial_path():
    chain = build_chain(SOJOURN, 1, [-1.0, -0.5, 0.0, 0.5])
    path = simulate_path(chain, -1.0, budget=3, seed=11)
    assert path.exhausted
    assert path.steps == 3


def test_path_seed_repeat_is_identical():
    chain = build_chain(SOJOURN, 1, [-1.0, -0.5, 0.0, 0.5])
    a = simulate_path(chain, -1.0, budget=200, seed=4)
    b = simulate_path(chain, -1.0, budget=200, seed=4)
    assert np.array_equal(a.sites, b.sites)
    assert np.array_equal(a.times, b.times)
    c = simulate_path(chain, -1.0, budget=200, seed=5)
    assert not np.array_equal(a.sites, c.sites)


def test_path_stochastic_time_keeps_time_increasing():
    chain = build_chain(SOJOURN, 1, [-1.0, -0.5, 0.0, 0.5])
    path = simulate_path(chain, -1.0, budget=2_000, seed=6, stochastic_time=True)
    assert np.all(np.diff(path.times) > 0)


# -- hitting probabilities ---------------------------------------------------


def test_hitting_brownian_control():
    chain = build_chain(BROWNIAN, 0, np.linspace(0.0, 1.0, 13))
    est = hitting_probability(chain, 1 / 3, 0.0, 1.0, 100_000, seed=20260814)
    assert est.within(2 / 3)
    assert est.samples == 100_000 and est.excluded == 0
    assert 0.001 < est.std_error < 0.002


def test_hitting_ex215_scale_ratio():
    grid = snap_grid(EX215, 0, 0.0, 1.0, 24, depth=6)
    chain = build_chain(EX215, 0, grid)
    est = hitting_probability(chain, 1 / 3, 0.0, 1.0, 100_000, seed=20260814)
    # (t(1) - t(1/3)) / (t(1) - t(0)) = (2 - 5/6) / 2
    assert est.within(7 / 12)
    assert est.excluded == 0


def test_hitting_from_the_target_is_exact():
    chain = build_chain(BROWNIAN, 0, np.linspace(0.0, 1.0, 13))
    est = hitting_probability(chain, 0.0, 0.0, 1.0, 500, seed=1)
    assert est.estimate == 1.0 and est.std_error == 0.0 and est.samples == 500
    est2 = hitting_probability(chain, 1.0, 0.0, 1.0, 500, seed=1)
    assert est2.estimate == 0.0


def test_hitting_reports_budget_exclusions():
    chain = build_chain(BROWNIAN, 0, np.linspace(0.0, 1.0, 13))
    est = hitting_probability(chain, 0.5, 0.0, 1.0, 2_000, seed=2, budget=4)
    # nobody can reach an end in four steps from the middle
    assert est.samples == 0 and est.excluded == 2_000
    assert math.isnan(est.estimate)
    est2 = hitting_probability(chain, 0.5, 0.0, 1.0, 2_000, seed=2, budget=50)
    assert est2.samples + est2.excluded == 2_000
    assert est2.excluded > 0


def test_hitting_is_bitwise_deterministic():
    grid = snap_grid(EX215, 0, 0.0, 1.0, 24, depth=6)
    chain = build_chain(EX215, 0, grid)
    a = hitting_probability(chain, grid[8], 0.0, 1.0, 20_000, seed=42)
    b = hitting_probability(chain, grid[8], 0.0, 1.0, 20_000, seed=42)
    assert a == b


# -- trace chains ------------------------------------------------------------


def _dust_grid(config):
    dust = config.complement.dust[0]
    pts = {float(a) for a, _ in dust.pieces()} | {float(b) for _, b in dust.pieces()}
    return sorted(pts)


def test_extension_trace_confined_to_one_gap():
    config = preset("ex218", depth=4)
    mu = build_trace_measure(config)
    grid = _dust_grid(config)
    table = simulate_trace_chain(config, mu, grid, 1 / 3, 50_000, seed=7, mode="extension")
    assert set(table.support().tolist()) == {1 / 3, 2 / 3}
    assert table.frequency.sum() == pytest.approx(1.0, rel=1e-12)
    assert (table.frequency > 0).sum() == 2


def test_brownian_trace_visits_every_dust_site():
    config = preset("ex218", depth=4)
    mu = build_trace_measure(config)
    grid = _dust_grid(config)
    table = simulate_trace_chain(config, mu, grid, 0.0, 300_000, seed=8, mode="brownian")
    assert len(grid) == 32
    assert (table.visits > 0).all()
    assert (table.frequency > 0).all()
    assert table.frequency.sum() == pytest.approx(1.0, rel=1e-12)


def test_trace_single_site_gets_all_mass():
    config = preset("ex218", depth=4)
    table = simulate_trace_chain(config, None, [0.0], 0.0, 1_000, seed=1)
    assert table.frequency.tolist() == [1.0]


def test_trace_grid_validation():
    config = preset("ex218", depth=4)
    with pytest.raises(ValueError):
        simulate_trace_chain(config, None, [], 0.0, 100, seed=1)
    with pytest.raises(ValueError, match="trace sites"):
        simulate_trace_chain(config, None, [0.0, 1.0], 0.4, 100, seed=1)
    with pytest.raises(ValueError, match="invariant interval"):
        simulate_trace_chain(config, None, [0.25, 1.0], 0.25, 100, seed=1, mode="extension")
    with pytest.raises(ValueError, match="mode"):
        simulate_trace_chain(config, None, [0.0, 1.0], 0.0, 100, seed=1, mode="exact")


# -- darned chains -----------------------------------------------------------


def test_darned_occupation_converges_to_image_masses():
    spec = darn(EX215, 0, depth=8)
    stats = simulate_darned(spec, np.linspace(0.0, 1.0, 17), 0.5, 2_000_000, seed=9)
    frac = stats.site_mass / stats.site_mass.sum()
    assert stats.occupation == pytest.approx(frac, abs=8e-3)
    assert stats.occupation.sum() == pytest.approx(1.0, rel=1e-12)
    assert stats.site_mass.sum() == pytest.approx(1.0, rel=1e-12)


def test_darned_occupation_ratio_approaches_three():
    # site 1/2 carries the middle-gap atom 1/3, site 1/4 the atom 1/9; the
    # unresolved residue spoils the ratio by O(3**-depth)
    ratios = []
    for d in (4, 6, 8, 10):
        spec = darn(EX215, 0, depth=d)
        grid = np.linspace(0.0, 1.0, 2**d + 1)
        stats = simulate_darned(spec, grid, 0.5, 2, seed=1)
        ratios.append(stats.site_mass[2 ** (d - 1)] / stats.site_mass[2 ** (d - 2)])
    assert all(a < b for a, b in zip(ratios, ratios[1:]))
    assert ratios[0] == pytest.approx(2.8, rel=1e-12)
    assert ratios[-1] == pytest.approx(3.0, abs=4e-4)
    # Monte Carlo sees the same ratio on the depth-6 grid
    spec = darn(EX215, 0, depth=6)
    stats = simulate_darned(spec, np.linspace(0.0, 1.0, 65), 0.5, 8_000_000, seed=13)
    mass_ratio = stats.site_mass[32] / stats.site_mass[16]
    assert stats.occupation[32] / stats.occupation[16] == pytest.approx(mass_ratio, rel=0.15)


def test_darned_sojourn_boundary_occupation():
    spec = darn(SOJOURN, 1, depth=8)
    assert spec.slow_reflection() == (True, False)
    stats = simulate_darned(spec, np.linspace(0.0, 0.5, 9), 0.0, 2_000_000, seed=12)
    # window [0, 1/2] collects the boundary atom plus the source mass of
    # [0, 2/3]: the central gap collapses onto the window edge image 1/2
    assert stats.site_mass.sum() == pytest.approx(5 / 3, rel=1e-12)
    frac0 = stats.site_mass[0] / stats.site_mass.sum()
    assert frac0 == pytest.approx(0.6, abs=0.01)
    assert stats.occupation[0] == pytest.approx(frac0, abs=0.02)


def test_darned_single_site_window():
    spec = darn(SOJOURN, 1, depth=8)
    stats = simulate_darned(spec, [0.5], 0.5, 100, seed=1)
    assert stats.occupation.tolist() == [1.0]
    assert stats.site_mass[0] == pytest.approx(1 / 3, rel=1e-12)


def test_darned_window_validation():
    spec = darn(SOJOURN, 1, depth=8)
    with pytest.raises(ValueError, match="zero image mass"):
        simulate_darned(spec, [0.5005, 0.5012], 0.5005, 100, seed=1)
    with pytest.raises(ValueError, match="image interval"):
        simulate_darned(spec, [-0.5, 0.5], 0.0, 100, seed=1)
    with pytest.raises(ValueError, match="grid site"):
        simulate_darned(spec, [0.0, 0.5], 0.3, 100, seed=1)


def test_darned_run_is_deterministic():
    spec = darn(EX215, 0, depth=6)
    grid = np.linspace(0.0, 1.0, 65)
    a = simulate_darned(spec, grid, 0.5, 100_000, seed=21)
    b = simulate_darned(spec, grid, 0.5, 100_000, seed=21)
    assert np.array_equal(a.occupation, b.occupation)
    assert np.array_equal(a.visits, b.visits)
