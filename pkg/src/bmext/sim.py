"""Grid random walks approximating the extension diffusions.

The embedded chain jumps between neighbouring grid sites with the classical
scale-ratio probabilities, so the scale function is harmonic for the chain
and hitting statistics reproduce the diffusion's exactly; the grid only
limits how much of the state space a walk can see.  Mean holding times
integrate the two-sided exit kernel against the speed measure (Lebesgue on
every interval), normalised so a Brownian cell of half-width h is left in
mean time h**2.  Singular scale mass therefore slows crossings without ever
adding residence time of its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .config import ComplementSpec, ExtensionConfig, TraceMeasure
from .darning import DarnedSpec
from .scale import ScaleFunction

__all__ = [
    "GridChain",
    "McEstimate",
    "OccupationStats",
    "PathSample",
    "VisitTable",
    "build_chain",
    "hitting_probability",
    "simulate_darned",
    "simulate_path",
    "simulate_trace_chain",
    "snap_grid",
]

_BATCH = 1 << 16
_CHUNK = 1 << 15


def _site_array(sites) -> np.ndarray:
    arr = np.array(sites, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("sites must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sites must be finite")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ValueError("sites must be strictly increasing")
    return arr


def _complement_member(comp: ComplementSpec, x: float) -> bool:
    if any(x == p for p in comp.points):
        return True
    if any(a <= x <= b for a, b in comp.segments):
        return True
    for d in comp.dust:
        if any(plo <= x <= phi for plo, phi in d.pieces()):
            return True
    return False


@dataclass(frozen=True)
class GridChain:
    """Embedded jump chain of one diffusion on a finite site grid.

    ``p_right`` is the probability of stepping to the next site up; it is
    forced to 1 (resp. 0) at reflecting ends and left meaningless at
    absorbing sites.  ``boundary`` records what the two window ends do.
    """

    sites: np.ndarray
    p_right: np.ndarray
    mean_holding: np.ndarray
    boundary: tuple[str, str]
    absorbing: np.ndarray
    interval_index: int | None = None

    def __post_init__(self):
        for arr in (self.sites, self.p_right, self.mean_holding, self.absorbing):
            arr.setflags(write=False)

    def site_index(self, x: float) -> int:
        i = int(np.searchsorted(self.sites, x))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.sites.size and math.isclose(
                self.sites[j], x, rel_tol=1e-12, abs_tol=1e-12
            ):
                return j
        raise ValueError(f"{x} is not a grid site")


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo point estimate with its sampling error."""

    estimate: float
    std_error: float
    samples: int
    seed: int
    excluded: int = 0

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k * self.std_error + 1e-12


@dataclass(frozen=True)
class PathSample:
    """One trajectory: visited sites with cumulative arrival times."""

    sites: np.ndarray
    times: np.ndarray
    exhausted: bool
    seed: int

    @property
    def steps(self) -> int:
        return self.sites.size - 1


@dataclass(frozen=True)
class VisitTable:
    """Mass-weighted visit frequencies of a walk, tabulated on trace sites."""

    sites: np.ndarray
    visits: np.ndarray
    weights: np.ndarray
    frequency: np.ndarray
    steps: int
    seed: int
    mode: str = "extension"

    def support(self) -> np.ndarray:
        return self.sites[self.visits > 0]


@dataclass(frozen=True)
class OccupationStats:
    """Holding-weighted occupation fractions of a darned-chain walk."""

    sites: np.ndarray
    site_mass: np.ndarray
    visits: np.ndarray
    occupation: np.ndarray
    steps: int
    seed: int


# -- chain construction ------------------------------------------------------


def snap_grid(
    config: ExtensionConfig,
    n: int,
    lo: float,
    hi: float,
    cells: int,
    depth: int = 8,
) -> np.ndarray:
    """Uniform grid on [lo, hi] with interior points pulled onto gap endpoints.

    Snapping keeps scale increments between neighbours exactly computable:
    a site on a gap endpoint splits the singular mass cleanly between its
    two cells.  Points move at most half a spacing; ties go left.
    """
    if not (lo < hi):
        raise ValueError("need lo < hi")
    if cells < 1:
        raise ValueError("need at least one cell")
    scale = config.interval(n).scale
    targets: set[float] = set()
    for blk in scale.w_supports(stack_shells=depth):
        if float(blk.hi) < lo or float(blk.lo) > hi:
            continue
        targets.add(float(blk.lo))
        targets.add(float(blk.hi))
        for _, glo, ghi, _ in blk.gaps(depth):
            targets.add(float(glo))
            targets.add(float(ghi))
    ordered = sorted(targets)
    base = np.linspace(lo, hi, cells + 1)
    half = (hi - lo) / (2 * cells)
    out = [lo]
    for c in base[1:-1]:
        i = int(np.searchsorted(ordered, c))
        near = [v for v in ordered[max(0, i - 1) : i + 1] if abs(v - c) <= half]
        best = min(near, key=lambda v: (abs(v - c), v)) if near else c
        if out[-1] < best < hi:
            out.append(best)
    out.append(hi)
    return np.array(out)


def _p_right(dl: float, dr: float) -> float:
    if math.isinf(dl) and math.isinf(dr):
        raise ValueError("site is walled in by infinite scale on both sides")
    if math.isinf(dr):
        return 0.0
    if math.isinf(dl):
        return 1.0
    return dl / (dl + dr)


def _mean_exit(scale: ScaleFunction, l, x, r, tl, tx, tr) -> float:
    # 2 * integral of the two-sided exit kernel against Lebesgue speed mass;
    # an infinite neighbour scale acts as an unreachable wall
    if math.isinf(tl) and math.isinf(tr):
        raise ValueError("site is walled in by infinite scale on both sides")
    if math.isinf(tr):
        a = scale.integral_t(l, x) - tl * (x - l)
        return 2.0 * (a + (tx - tl) * (r - x))
    if math.isinf(tl):
        b = tr * (r - x) - scale.integral_t(x, r)
        return 2.0 * ((tr - tx) * (x - l) + b)
    a = scale.integral_t(l, x) - tl * (x - l)
    b = tr * (r - x) - scale.integral_t(x, r)
    return 2.0 * ((tr - tx) * a + (tx - tl) * b) / (tr - tl)


def build_chain(config: ExtensionConfig, n: int, sites) -> GridChain:
    """Jump chain of interval n's diffusion on the given sites.

    Sites must lie in the interval's closure; the two window ends reflect
    when they sit on an included endpoint and absorb otherwise.  A site on
    an adjacent trap point is legal and absorbing, and the infinite scale
    walls it off from the rest of the grid.
    """
    iv = config.interval(n)
    scale = iv.scale
    arr = _site_array(sites)
    m = arr.size
    absorbing = np.zeros(m, dtype=bool)
    for i, s in enumerate(arr):
        if iv.contains(s):
            continue
        other = config.locate(s)
        if other is not None:
            raise ValueError(
                f"grid straddles intervals {n} and {other}: site {s} belongs to both windows"
            )
        if _complement_member(config.complement, s) and s in (iv.lo, iv.hi):
            absorbing[i] = True
            continue
        raise ValueError(f"site {s} lies outside interval {iv.describe()}")

    if m == 1:
        # a one-site window cannot move; only useful for trap sites
        return GridChain(
            arr, np.zeros(1), np.zeros(1), ("absorb", "absorb"), np.ones(1, dtype=bool), n
        )

    tvals = np.array([scale.eval(s) for s in arr])
    if not np.all(np.diff(tvals) > 0):
        raise ValueError("grid is too fine: scale values collide in float resolution")

    def end_behaviour(i: int) -> str:
        if absorbing[i]:
            return "absorb"
        s = arr[i]
        if (s == iv.lo and iv.include_lo) or (s == iv.hi and iv.include_hi):
            return "reflect"
        return "absorb"

    b_lo = end_behaviour(0)
    b_hi = end_behaviour(m - 1)
    if b_lo == "absorb":
        absorbing[0] = True
    if b_hi == "absorb":
        absorbing[-1] = True

    p = np.zeros(m)
    hold = np.zeros(m)
    for i in range(1, m - 1):
        dl = tvals[i] - tvals[i - 1]
        dr = tvals[i + 1] - tvals[i]
        p[i] = _p_right(dl, dr)
        hold[i] = _mean_exit(
            scale, arr[i - 1], arr[i], arr[i + 1], tvals[i - 1], tvals[i], tvals[i + 1]
        )
    if b_lo == "reflect":
        p[0] = 1.0
        hold[0] = 2.0 * ((arr[1] - arr[0]) * tvals[1] - scale.integral_t(arr[0], arr[1]))
    if b_hi == "reflect":
        p[-1] = 0.0
        hold[-1] = 2.0 * (scale.integral_t(arr[-2], arr[-1]) - (arr[-1] - arr[-2]) * tvals[-2])
    bad = ~absorbing & ~(np.isfinite(hold) & (hold > 0.0))
    if bad.any():
        raise ValueError(f"holding time degenerate at sites {arr[bad]}")
    return GridChain(arr, p, hold, (b_lo, b_hi), absorbing, interval_index=n)


# -- single trajectories -----------------------------------------------------


def simulate_path(
    chain: GridChain,
    x0: float,
    budget: int = 1_000_000,
    seed: int = 0,
    stochastic_time: bool = False,
) -> PathSample:
    """Walk the chain from x0 until absorption or the step budget runs out.

    Time advances by the mean holding of each visited site; in stochastic
    mode every holding is scaled by an independent unit exponential.
    """
    i = chain.site_index(x0)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    idx = [i]
    times = [0.0]
    exhausted = False
    while not chain.absorbing[idx[-1]]:
        if len(idx) > budget:
            exhausted = True
            break
        j = idx[-1]
        h = float(chain.mean_holding[j])
        if stochastic_time:
            h *= float(rng.exponential())
        times.append(times[-1] + h)
        idx.append(j + 1 if rng.random() < chain.p_right[j] else j - 1)
    return PathSample(chain.sites[np.array(idx)], np.array(times), exhausted, seed)


# -- hitting statistics ------------------------------------------------------


def hitting_probability(
    chain: GridChain,
    x0: float,
    l: float,
    r: float,
    n_samples: int,
    seed: int = 0,
    budget: int = 10_000_000,
) -> McEstimate:
    """Estimate P(hit l before r) from x0 by independent chain walks.

    The embedded chain is exactly scale-harmonic, so the estimate converges
    to (t(r) - t(x0)) / (t(r) - t(l)).  Walks still unresolved after
    ``budget`` steps, or frozen on an interior absorbing site, are excluded
    from the estimate and reported in ``excluded``.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    il = chain.site_index(l)
    ir = chain.site_index(r)
    i0 = chain.site_index(x0)
    if il >= ir:
        raise ValueError("need l < r")
    if i0 == il or i0 == ir:
        return McEstimate(1.0 if i0 == il else 0.0, 0.0, n_samples, seed)
    if not (il < i0 < ir):
        raise ValueError("need l <= x0 <= r on grid sites")

    p = chain.p_right
    absorbing = chain.absorbing
    ss = np.random.SeedSequence(seed)
    n_batches = -(-n_samples // _BATCH)
    succ = fail = excl = 0
    remaining = n_samples
    for child in ss.spawn(n_batches):
        rng = np.random.default_rng(child)
        count = min(_BATCH, remaining)
        remaining -= count
        pos = np.full(count, i0, dtype=np.int64)
        steps = 0
        while pos.size and steps < budget:
            u = rng.random(pos.size)
            pos = np.where(u < p[pos], pos + 1, pos - 1)
            hit_l = pos == il
            hit_r = pos == ir
            stuck = absorbing[pos] & ~hit_l & ~hit_r
            done = hit_l | hit_r | stuck
            if done.any():
                succ += int(hit_l.sum())
                fail += int(hit_r.sum())
                excl += int(stuck.sum())
                pos = pos[~done]
            steps += 1
        excl += pos.size
    settled = succ + fail
    if settled == 0:
        return McEstimate(math.nan, math.nan, 0, seed, excluded=excl)
    phat = succ / settled
    if settled > 1 and 0 < succ < settled:
        se = math.sqrt(phat * (1.0 - phat) * settled / (settled - 1)) / math.sqrt(settled)
    else:
        se = 0.0
    return McEstimate(phat, se, settled, seed, excluded=excl)


# -- trace chains ------------------------------------------------------------


def _walk_visits(chain: GridChain, i0: int, steps: int, rng) -> np.ndarray:
    visits = np.zeros(chain.sites.size, dtype=np.int64)
    visits[i0] += 1
    p = chain.p_right.tolist()
    absorbing = chain.absorbing.tolist()
    pos = i0
    consumed = 0
    while consumed < steps and not absorbing[pos]:
        block = rng.random(min(_CHUNK, steps - consumed)).tolist()
        for u in block:
            pos = pos + 1 if u < p[pos] else pos - 1
            visits[pos] += 1
            consumed += 1
            if absorbing[pos]:
                break
    return visits


def _brownian_chain(sites: np.ndarray) -> GridChain:
    # global Brownian walk on the window: identity scale, reflecting ends
    m = sites.size
    p = np.zeros(m)
    hold = np.zeros(m)
    for i in range(1, m - 1):
        p[i] = (sites[i] - sites[i - 1]) / (sites[i + 1] - sites[i - 1])
        hold[i] = (sites[i] - sites[i - 1]) * (sites[i + 1] - sites[i])
    p[0] = 1.0
    p[-1] = 0.0
    if m > 1:
        hold[0] = (sites[1] - sites[0]) ** 2
        hold[-1] = (sites[-1] - sites[-2]) ** 2
    return GridChain(sites, p, hold, ("reflect", "reflect"), np.zeros(m, dtype=bool))


def _site_weights(mu, sites: np.ndarray) -> np.ndarray:
    if mu is None:
        return np.ones(sites.size)
    if isinstance(mu, TraceMeasure):
        if sites.size == 1:
            return np.array([1.0])
        mids = (sites[1:] + sites[:-1]) / 2.0
        edges = np.concatenate(
            ([sites[0] - (sites[1] - sites[0]) / 2.0], mids, [sites[-1] + (sites[-1] - sites[-2]) / 2.0])
        )
        return np.array([mu.mass(a, b) for a, b in zip(edges, edges[1:])])
    w = np.asarray(mu, dtype=float)
    if w.shape != sites.shape:
        raise ValueError("per-site weights must match the grid")
    return w


def simulate_trace_chain(
    config: ExtensionConfig,
    mu,
    grid,
    x0: float,
    n_steps: int,
    seed: int = 0,
    mode: str = "extension",
    cells: int = 16,
) -> VisitTable:
    """Visit frequencies on trace sites, weighted by the trace measure.

    ``grid`` lists the trace sites under observation.  In extension mode the
    walk runs on x0's invariant interval and can meet the trace set only at
    that interval's endpoints; in brownian mode the walk moves over the whole
    window as a free Brownian chain and every trace site is fair game.  The
    brownian mode is a qualitative device: it certifies reachability, not a
    quantitative approximation of the time-changed process.
    """
    k_sites = _site_array(grid)
    weights = _site_weights(mu, k_sites)
    k0 = int(np.argmin(np.abs(k_sites - x0)))
    if not math.isclose(k_sites[k0], x0, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError("x0 must be one of the trace sites")
    if k_sites.size == 1:
        return VisitTable(
            k_sites, np.ones(1, dtype=np.int64), weights, np.ones(1), 0, seed, mode
        )

    if mode == "extension":
        n = config.locate(x0)
        if n is None:
            raise ValueError("x0 does not belong to any invariant interval")
        iv = config.interval(n)
        if not iv.bounded:
            raise ValueError("extension-trace chains need a bounded invariant interval")
        if not (iv.include_lo and iv.include_hi):
            raise ValueError("extension-trace chains need both endpoints in the interval")
        chain = build_chain(config, n, np.linspace(iv.lo, iv.hi, cells + 1))
    elif mode == "brownian":
        chain = _brownian_chain(k_sites)
    else:
        raise ValueError(f"unknown mode {mode!r}; use 'extension' or 'brownian'")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    chain_visits = _walk_visits(chain, chain.site_index(x0), n_steps, rng)
    visits = np.zeros(k_sites.size, dtype=np.int64)
    for a, s in enumerate(k_sites):
        try:
            visits[a] = chain_visits[chain.site_index(s)]
        except ValueError:
            continue  # trace site outside this walk's window stays unvisited
    weighted = visits * weights
    total = weighted.sum()
    frequency = weighted / total if total > 0 else weighted
    return VisitTable(k_sites, visits, weights, frequency, n_steps, seed, mode)


# -- darned chains -----------------------------------------------------------


def _nearest_site(sites: np.ndarray, loc: float) -> int:
    j = int(np.searchsorted(sites, loc))
    if j == 0:
        return 0
    if j == sites.size:
        return sites.size - 1
    # ties go to the left site
    return j - 1 if loc - sites[j - 1] <= sites[j] - loc else j


def simulate_darned(
    spec: DarnedSpec,
    grid,
    x0: float,
    n_steps: int,
    seed: int = 0,
    include_residue: bool = True,
) -> OccupationStats:
    """Occupation fractions of the darned walk over a window of image sites.

    The walk is symmetric (the darned process runs in natural scale) with
    lazy reflection half a cell beyond each window end, so its visit law is
    uniform across sites and holding-weighted occupation converges to the
    normalised image masses.  Atoms and, optionally, the unresolved residue
    aggregates are assigned to their nearest sites, ties to the left.
    """
    sites = _site_array(grid)
    if sites[0] < spec.image_lo or sites[-1] > spec.image_hi:
        raise ValueError("window must lie inside the image interval")
    i0 = _nearest_site(sites, x0)
    if not math.isclose(sites[i0], x0, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError("x0 must be a grid site")

    pool = spec.atoms + (spec.residue if include_residue else ())
    masses = [Fraction(0)] * sites.size
    for loc, mass in pool:
        if sites[0] <= loc <= sites[-1]:
            masses[_nearest_site(sites, loc)] += mass
    total = sum(masses, Fraction(0))
    if total == 0:
        raise ValueError("zero image mass in the window")
    site_mass = np.array([float(v) for v in masses])

    if sites.size == 1:
        return OccupationStats(
            sites, site_mass, np.ones(1, dtype=np.int64), np.ones(1), 0, seed
        )
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    m = sites.size
    steps = rng.integers(0, 2, size=n_steps, dtype=np.int64) * 2 - 1
    free = i0 + np.cumsum(steps)
    # folding a free walk at half-integer walls gives the lazy reflected chain
    folded = np.mod(free, 2 * m)
    folded = np.where(folded >= m, 2 * m - 1 - folded, folded)
    visits = np.bincount(folded, minlength=m)
    visits[i0] += 1
    weighted = visits * site_mass
    total_w = weighted.sum()
    occupation = weighted / total_w if total_w > 0 else weighted
    return OccupationStats(sites, site_mass, visits, occupation, n_steps, seed)
