"""Monte Carlo simulation of the marital history and the insured's death.

Paths are generated in fixed-size blocks, each with its own counter-based
Philox stream keyed by ``(seed, block index)``. Results therefore do not
depend on the number of worker threads. Within a block every path moves
through the same sequence of rounds (marry, then divorce or lose the spouse),
vectorised across paths.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .intensities import (
    DeathDensity,
    HazardDeathDensity,
    IntensityCurve,
    IntensitySet,
    MortalitySurface,
    invert_cumulative,
)
from .payments import PolicyKind, PolicySpec

BLOCK_SIZE = 1 << 15
TABLE_STEP = 0.01      # resolution of 1-D cumulative hazard tables
SURFACE_STEP = 0.1     # resolution of the 2-D table used when spouse mortality improves over time
MAX_ROUNDS = 500

DIVORCE, SPOUSE_DEATH = 0, 1


def _rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block), stream])))


def _nodes(upper: float, step: float) -> np.ndarray:
    n = int(np.ceil(upper / step - 1e-9))
    return np.linspace(0.0, n * step, n + 1) if n > 0 else np.zeros(1)


@dataclass(frozen=True)
class HazardTable:
    """Cumulative hazard of a curve on a fine lattice, for inverse sampling."""

    nodes: np.ndarray
    cum: np.ndarray

    @classmethod
    def from_curve(cls, curve: IntensityCurve, horizon: Optional[float] = None, step: float = TABLE_STEP):
        upper = curve.t_max if horizon is None else min(horizon, curve.t_max)
        nodes = np.minimum(_nodes(upper, step), upper)
        return cls(nodes, np.asarray(curve.cumulative(nodes), dtype=float))

    def sample(self, start: np.ndarray, exp_draw: np.ndarray) -> np.ndarray:
        """First time after ``start`` at which the hazard accrued since ``start`` reaches ``exp_draw``."""
        start = np.asarray(start, dtype=float)
        out = np.full(start.shape, np.inf)
        ok = start <= self.nodes[-1]
        base = np.interp(start[ok], self.nodes, self.cum)
        out[ok] = np.maximum(invert_cumulative(self.nodes, self.cum, base + exp_draw[ok]), start[ok])
        return out


def sample_time_from_hazard(curve: IntensityCurve, start, rng: np.random.Generator,
                            size: Optional[int] = None, step: float = TABLE_STEP) -> np.ndarray:
    """Draw ``tau`` with ``P(tau > t) = exp(-int_start^t rate)``; ``inf`` if the hazard never accrues enough."""
    start_arr = np.broadcast_to(np.asarray(start, dtype=float), (size,) if size is not None else np.shape(start))
    table = HazardTable.from_curve(curve, step=step)
    out = table.sample(start_arr, rng.standard_exponential(start_arr.shape))
    return out if out.ndim else float(out)


class SpouseDeathSampler:
    """Samples the death time of a spouse aged ``age`` at time ``start`` under a mortality surface.

    Without longevity improvement the hazard depends on age only and a 1-D
    table in age suffices. Otherwise a table ``H[b, t] = int_0^t q(r, b + r) dr``
    indexed by ``b = age - time`` is built and interpolated linearly in ``b``.
    Ages beyond the base curve's domain keep its last rate.
    """

    def __init__(self, surface: MortalitySurface, t_max: float, step: float = SURFACE_STEP):
        self.surface = surface
        self.t_max = t_max
        base = surface.base
        if surface.time_independent:
            self.age_table = HazardTable.from_curve(base)
            self._age_rate_end = float(base.rate(base.t_max))
        else:
            self.age_table = None
            self.step = step
            self.t_nodes = _nodes(t_max, step)
            self.b_nodes = np.arange(-len(self.t_nodes) + 1, int(np.ceil(base.t_max / step)) + 1) * step
            ages = self.b_nodes[:, None] + self.t_nodes[None, :]
            rates = np.where(ages >= 0, base.rate(np.clip(ages, 0.0, base.t_max)), 0.0)
            rates = rates * surface.factor(self.t_nodes)[None, :]
            H = np.zeros_like(rates)
            H[:, 1:] = np.cumsum(0.5 * step * (rates[:, 1:] + rates[:, :-1]), axis=1)
            self.H = H

    def sample(self, start: np.ndarray, age: np.ndarray, exp_draw: np.ndarray) -> np.ndarray:
        start = np.asarray(start, dtype=float)
        age = np.asarray(age, dtype=float)
        if self.age_table is not None:
            tab = self.age_table
            a_end = tab.nodes[-1]
            base = np.interp(np.minimum(age, a_end), tab.nodes, tab.cum) + self._age_rate_end * np.maximum(age - a_end, 0)
            target = base + exp_draw
            death_age = invert_cumulative(tab.nodes, tab.cum, target)
            beyond = ~np.isfinite(death_age)
            if self._age_rate_end > 0:
                extra = (target[beyond] - tab.cum[-1]) / self._age_rate_end
                death_age[beyond] = a_end + extra
            death_age = np.maximum(death_age, age)
            return start + (death_age - age)
        return self._sample_2d(start, age, exp_draw)

    def _sample_2d(self, start, age, exp_draw):
        step, H, t_nodes = self.step, self.H, self.t_nodes
        pos = (age - start - self.b_nodes[0]) / step
        i0 = np.clip(np.floor(pos).astype(int), 0, H.shape[0] - 2)
        w = np.clip(pos - i0, 0.0, 1.0)

        def row_value(j):
            return (1 - w) * H[i0, j] + w * H[i0 + 1, j]

        def row_at(t):
            s = np.clip(t / step, 0, t_nodes.size - 1)
            j = np.minimum(np.floor(s).astype(int), t_nodes.size - 2)
            f = s - j
            return (1 - f) * row_value(j) + f * row_value(j + 1)

        target = row_at(np.minimum(start, t_nodes[-1])) + exp_draw
        lo = np.zeros(start.shape, dtype=int)
        hi = np.full(start.shape, t_nodes.size - 1)
        out = np.full(start.shape, np.inf)
        reach = row_value(hi) >= target
        # smallest j with row_value(j) >= target
        while True:
            active = reach & (hi - lo > 1)
            if not active.any():
                break
            mid = (lo + hi) // 2
            go_right = row_value(mid) < target
            lo = np.where(active & go_right, mid, lo)
            hi = np.where(active & ~go_right, mid, hi)
        j = hi
        c1 = row_value(j)
        c0 = row_value(j - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(c1 > c0, (target - c0) / (c1 - c0), 0.0)
        t = t_nodes[j - 1] + np.clip(frac, 0.0, 1.0) * step
        out[reach] = np.maximum(t[reach], start[reach])
        return out


class DeathTimeSampler:
    """Inverse-cdf sampling of the insured's death time."""

    def __init__(self, death: DeathDensity, step: float = TABLE_STEP):
        if isinstance(death, HazardDeathDensity):
            self.table = HazardTable.from_curve(death.hazard, step=step)
            self.hazard_form = True
        else:
            nodes = np.minimum(_nodes(death.t_max, step), death.t_max)
            self.table = HazardTable(nodes, np.asarray(death.cdf(nodes), dtype=float))
            self.hazard_form = False

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.hazard_form:
            return self.table.sample(np.zeros(n), rng.standard_exponential(n))
        u = rng.random(n)
        return invert_cumulative(self.table.nodes, self.table.cum, u)


# ---------------------------------------------------------------------------
# path generation


@dataclass
class PathBlock:
    """Histories of ``n`` paths; row ``k`` of each array belongs to the (k+1)-th marriage."""

    marry: np.ndarray        # (rounds, n), inf if that marriage never happens before t_max
    age: np.ndarray          # spouse age at marriage, nan if none
    leave: np.ndarray        # end of the marriage, inf if still married at t_max
    cause: np.ndarray        # DIVORCE or SPOUSE_DEATH, -1 if none
    death: np.ndarray        # insured death time (may exceed t_max or be inf)
    post_draw: np.ndarray    # Exp(1) draw for the spouse's residual life after the insured's death
    t_max: float

    @property
    def n(self) -> int:
        return self.death.size

    @property
    def rounds(self) -> int:
        return self.marry.shape[0]


class _Samplers:
    def __init__(self, intensities: IntensitySet, t_max: float):
        self.intensities = intensities
        self.t_max = t_max
        self.gamma = HazardTable.from_curve(intensities.gamma, horizon=t_max)
        self.sigma = HazardTable.from_curve(intensities.sigma, horizon=t_max)
        self.spouse = SpouseDeathSampler(intensities.q_spouse, t_max)
        self.death = DeathTimeSampler(intensities.death) if intensities.death is not None else None


def _simulate_block(samplers: _Samplers, n: int, seed: int, block: int) -> PathBlock:
    rng = _rng(seed, block)
    t_max = samplers.t_max
    death = samplers.death.sample(rng, n) if samplers.death is not None else np.full(n, np.inf)
    post_draw = rng.standard_exponential(n)
    marry_rows, age_rows, leave_rows, cause_rows = [], [], [], []
    now = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for _ in range(MAX_ROUNDS):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        m = np.full(n, np.inf)
        y = np.full(n, np.nan)
        s = np.full(n, np.inf)
        c = np.full(n, -1, dtype=np.int8)
        mi = samplers.gamma.sample(now[idx], rng.standard_exponential(idx.size))
        married = mi <= t_max
        idx, mi = idx[married], mi[married]
        if idx.size == 0:
            break
        yi = samplers.intensities.phi.sample(mi, rng)
        di = samplers.sigma.sample(mi, rng.standard_exponential(idx.size))
        qi = samplers.spouse.sample(mi, yi, rng.standard_exponential(idx.size))
        si = np.minimum(di, qi)
        ci = np.where(qi < di, SPOUSE_DEATH, DIVORCE).astype(np.int8)
        si = np.where(si <= t_max, si, np.inf)
        ci = np.where(np.isfinite(si), ci, -1).astype(np.int8)
        m[idx], y[idx], s[idx], c[idx] = mi, yi, si, ci
        marry_rows.append(m)
        age_rows.append(y)
        leave_rows.append(s)
        cause_rows.append(c)
        active[:] = False
        active[idx] = np.isfinite(s[idx])
        now = np.where(active, s, now)
    else:
        raise RuntimeError(f"paths still active after {MAX_ROUNDS} marriages")
    def stack(rows, dtype=float):
        return np.array(rows, dtype=dtype).reshape(len(rows), n)

    return PathBlock(stack(marry_rows), stack(age_rows), stack(leave_rows),
                     stack(cause_rows, np.int8), death, post_draw, t_max)


def worker_count() -> int:
    env = os.environ.get("PENSION_ENGINE_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _blocks(n_paths: int, block_size: int) -> List[Tuple[int, int]]:
    out = []
    for b, start in enumerate(range(0, n_paths, block_size)):
        out.append((b, min(block_size, n_paths - start)))
    return out


def _map_blocks(fn, intensities: IntensitySet, n_paths: int, seed: int, t_max: float,
                block_size: int = BLOCK_SIZE, threads: Optional[int] = None):
    """Apply ``fn(PathBlock)`` to every block, results in block order."""
    samplers = _Samplers(intensities, t_max)
    jobs = _blocks(n_paths, block_size)

    def run(job):
        b, n = job
        return fn(_simulate_block(samplers, n, seed, b))

    workers = threads or worker_count()
    if workers == 1 or len(jobs) == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


# ---------------------------------------------------------------------------
# single paths


@dataclass
class MaritalPath:
    """One realised history. ``events`` holds ``(time, from_state, to_state)`` with
    states ``"s0"``, ``"m1"``, ``"s1"``, ... and each exit tagged by its cause."""

    events: List[Tuple[float, str, str]]
    spouse_ages: List[float]          # spouse age at each marriage
    exit_causes: List[str]            # "divorce" or "spouse_death" for each completed marriage
    death_time: float
    t_max: float

    def state_at(self, t: float) -> str:
        state = "s0"
        for time, _, to in self.events:
            if time <= t:
                state = to
        return state

    def married_at_death(self) -> bool:
        return self.death_time <= self.t_max and self.state_at(self.death_time).startswith("m")


def _path_from_block(block: PathBlock, i: int) -> MaritalPath:
    events, ages, causes = [], [], []
    for k in range(block.rounds):
        m = block.marry[k, i]
        if not np.isfinite(m):
            break
        events.append((float(m), f"s{k}", f"m{k + 1}"))
        ages.append(float(block.age[k, i]))
        s = block.leave[k, i]
        if not np.isfinite(s):
            break
        cause = "spouse_death" if block.cause[k, i] == SPOUSE_DEATH else "divorce"
        events.append((float(s), f"m{k + 1}", f"s{k + 1}"))
        causes.append(cause)
    return MaritalPath(events, ages, causes, float(block.death[i]), block.t_max)


def simulate_path(intensities: IntensitySet, seed: int, t_max: float = 125.0) -> MaritalPath:
    """One path from its own stream; the same seed always gives the same path."""
    block = _simulate_block(_Samplers(intensities, t_max), 1, seed, 0)
    return _path_from_block(block, 0)


def check_path(path: MaritalPath) -> None:
    """Raise ``AssertionError`` unless the path follows the transition graph."""
    times = [e[0] for e in path.events]
    assert all(b > a for a, b in zip(times, times[1:])), "event times must increase strictly"
    state = "s0"
    for k, (time, src, dst) in enumerate(path.events):
        assert src == state, f"event {k} leaves {src} but the path is in {state}"
        nu = int(src[1:])
        if src.startswith("s"):
            assert dst == f"m{nu + 1}", f"from single state {src} only m{nu + 1} is reachable"
        else:
            assert dst == f"s{nu}", f"from {src} only s{nu} is reachable"
        assert 0 <= time <= path.t_max
        state = dst
    assert len(path.spouse_ages) == sum(1 for e in path.events if e[2].startswith("m"))
    assert all(a >= 0 for a in path.spouse_ages)


def iter_paths(intensities: IntensitySet, n_paths: int, seed: int, t_max: float = 125.0,
               block_size: int = BLOCK_SIZE):
    """All paths of a run, as ``MaritalPath`` objects (slow; for tests and inspection)."""
    samplers = _Samplers(intensities, t_max)
    for b, n in _blocks(n_paths, block_size):
        block = _simulate_block(samplers, n, seed, b)
        for i in range(n):
            yield _path_from_block(block, i)


# ---------------------------------------------------------------------------
# estimators


@dataclass
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    se: np.ndarray
    n: int                 # number of observations the density is normalised by
    available: bool = True


@dataclass
class SimulationEstimate:
    n_paths: int
    g_times: np.ndarray
    g: np.ndarray
    g_se: np.ndarray
    married_layers: np.ndarray     # P(married for the nu-th time at t), rows nu = 1..
    single_layers: np.ndarray      # P(single for the nu-th time at t), rows nu = 0..
    f: Dict[float, Histogram]
    first_marriage: Dict[int, Histogram]   # densities of marriage times, keyed by nu
    exit_times: Dict[int, Histogram]       # densities of exit times from the nu-th marriage
    max_marriages: int

    def layer_se(self, p: np.ndarray) -> np.ndarray:
        return np.sqrt(p * (1 - p) / self.n_paths)


def _time_histogram(times: np.ndarray, edges: np.ndarray) -> np.ndarray:
    finite = times[np.isfinite(times)]
    return np.histogram(finite, bins=edges)[0]


def _density_hist(counts: np.ndarray, n: int, edges: np.ndarray) -> Histogram:
    width = np.diff(edges)
    if n == 0:
        z = np.full(counts.shape, np.nan)
        return Histogram(edges, z, z.copy(), 0, available=False)
    p = counts / n
    return Histogram(edges, p / width, np.sqrt(p * (1 - p) / n) / width, n)


def estimate_marital(intensities: IntensitySet, n_paths: int, t_max: float = 125.0,
                     g_times: Sequence[float] = (), f_times: Sequence[float] = (), bin: float = 1.0,
                     y_max: float = 125.0, seed: int = 0, time_bin: float = 1.0, layers: int = 3,
                     threads: Optional[int] = None, block_size: int = BLOCK_SIZE) -> SimulationEstimate:
    """Fractions married/single at ``g_times``, spouse-age histograms at ``f_times`` and
    histograms of the marriage and exit times of the first ``layers`` marriages."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    g_times = np.asarray(g_times, dtype=float)
    f_times = [float(t) for t in f_times]
    age_edges = np.arange(0.0, y_max + bin / 2, bin)
    time_edges = np.arange(0.0, t_max + time_bin / 2, time_bin)
    n_layers = layers

    def summarise(block: PathBlock):
        R = block.rounds
        married = np.zeros((max(R, n_layers), g_times.size), dtype=np.int64)
        single = np.zeros((max(R, n_layers) + 1, g_times.size), dtype=np.int64)
        age_counts = {t: np.zeros(age_edges.size - 1, dtype=np.int64) for t in f_times}
        n_married_f = {t: 0 for t in f_times}
        for j, t in enumerate(g_times):
            prev_leave = np.zeros(block.n)
            for k in range(R):
                in_m = (block.marry[k] <= t) & (t < block.leave[k])
                married[k, j] = int(in_m.sum())
                single[k, j] = int(((prev_leave <= t) & (t < block.marry[k])).sum())
                prev_leave = block.leave[k]
            single[R, j] = int((prev_leave <= t).sum()) if R else block.n
        for t in f_times:
            for k in range(R):
                in_m = (block.marry[k] <= t) & (t < block.leave[k])
                ages = block.age[k, in_m] + t - block.marry[k, in_m]
                age_counts[t] += np.histogram(ages, bins=age_edges)[0]
                n_married_f[t] += int(in_m.sum())
        m_hist = {k + 1: _time_histogram(block.marry[k], time_edges) if k < R else np.zeros(time_edges.size - 1, dtype=np.int64)
                  for k in range(n_layers)}
        s_hist = {k + 1: _time_histogram(block.leave[k], time_edges) if k < R else np.zeros(time_edges.size - 1, dtype=np.int64)
                  for k in range(n_layers)}
        return married, single, age_counts, n_married_f, m_hist, s_hist, R

    parts = _map_blocks(summarise, intensities, n_paths, seed, t_max, block_size, threads)
    R = max(p[6] for p in parts)
    rows = max(R, n_layers)
    married = np.zeros((rows, g_times.size), dtype=np.int64)
    single = np.zeros((rows + 1, g_times.size), dtype=np.int64)
    for p in parts:
        married[: p[0].shape[0]] += p[0]
        single[: p[1].shape[0]] += p[1]
    g_counts = married.sum(axis=0)
    g = g_counts / n_paths
    f = {}
    for t in f_times:
        counts = sum(p[2][t] for p in parts)
        nm = sum(p[3][t] for p in parts)
        f[t] = _density_hist(counts, nm, age_edges)
    first = {k: _density_hist(sum(p[4][k] for p in parts), n_paths, time_edges) for k in range(1, n_layers + 1)}
    exits = {k: _density_hist(sum(p[5][k] for p in parts), n_paths, time_edges) for k in range(1, n_layers + 1)}
    return SimulationEstimate(
        n_paths=n_paths,
        g_times=g_times,
        g=g,
        g_se=np.sqrt(g * (1 - g) / n_paths),
        married_layers=married / n_paths,
        single_layers=single / n_paths,
        f=f,
        first_marriage=first,
        exit_times=exits,
        max_marriages=R,
    )


@dataclass
class PolicyValueEstimate:
    label: str
    mean: float
    se: float
    n_paths: int
    cumulative_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cumulative_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cumulative_se: np.ndarray = field(default_factory=lambda: np.zeros(0))


class _DiscountTable:
    """``D(t) = exp(-int_0^t r)`` and ``K(t) = int_0^t D`` on a fine lattice."""

    def __init__(self, rate, t_max: float, step: float = TABLE_STEP):
        self.nodes = np.minimum(_nodes(t_max, step), t_max)
        self.disc = np.asarray(rate.discount(self.nodes), dtype=float)
        self.K = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(self.nodes) * (self.disc[1:] + self.disc[:-1]))])

    def discount(self, t):
        return np.asarray(np.exp(np.interp(t, self.nodes, np.log(self.disc))))

    def integral(self, t):
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(self.nodes, t, side="right") - 1, 0, self.nodes.size - 2)
        d = t - self.nodes[i]
        d_end = self.discount(t)
        return self.K[i] + 0.5 * d * (self.disc[i] + d_end)


def _payments(block: PathBlock, policy: PolicySpec, spouse_post: SpouseDeathSampler,
              disc: Optional[_DiscountTable], cum_times: np.ndarray):
    """Per-path present value and undiscounted cumulative payments at ``cum_times``."""
    n, t_max = block.n, block.t_max
    T = block.death
    pv = np.zeros(n)
    cum = np.zeros((cum_times.size, n))
    y_at = np.full(n, np.nan)
    alive = T <= t_max
    for k in range(block.rounds):
        hit = alive & (block.marry[k] <= T) & (T < block.leave[k])
        y_at[hit] = block.age[k, hit] + T[hit] - block.marry[k, hit]
    idx = np.flatnonzero(np.isfinite(y_at))
    if idx.size == 0:
        return pv, cum
    Ti, Yi = T[idx], y_at[idx]
    D = spouse_post.sample(Ti, Yi, block.post_draw[idx])
    a = policy.amount
    if policy.kind is PolicyKind.LUMP_SUM:
        pay_time = np.where(Yi >= policy.c, Ti, Ti + policy.c - Yi)
        paid = (Yi >= policy.c) | ((D > pay_time) & (pay_time <= t_max))
        pay_time, sel = pay_time[paid], idx[paid]
        if disc is not None:
            pv[sel] = a * disc.discount(pay_time)
        for j, t in enumerate(cum_times):
            cum[j, sel] = np.where(pay_time <= t, a, 0.0)
        return pv, cum
    end = np.minimum(D, t_max)
    if policy.kind is PolicyKind.TERMINATING:
        end = np.minimum(end, Ti + policy.c - Yi)
    end = np.maximum(end, Ti)
    if disc is not None:
        pv[idx] = a * (disc.integral(end) - disc.integral(Ti))
    for j, t in enumerate(cum_times):
        cum[j, idx] = a * np.clip(np.minimum(end, t) - Ti, 0.0, None)
    return pv, cum


def estimate_policy_values(intensities: IntensitySet, policies: Sequence[PolicySpec], rate,
                           n_paths: int, t_max: float = 125.0, seed: int = 0,
                           cumulative_times: Sequence[float] = (), threads: Optional[int] = None,
                           block_size: int = BLOCK_SIZE) -> List[PolicyValueEstimate]:
    """Discounted payments per path for several policies on the same simulated paths."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if intensities.death is None:
        raise ValueError("policy valuation needs the insured's death density")
    cum_times = np.asarray(cumulative_times, dtype=float)
    disc = _DiscountTable(rate, t_max) if rate is not None else None
    post = [SpouseDeathSampler(p.spouse_mortality(intensities.q_spouse), t_max) for p in policies]

    def summarise(block: PathBlock):
        out = []
        for p, sampler in zip(policies, post):
            pv, cum = _payments(block, p, sampler, disc, cum_times)
            out.append((pv.sum(), np.square(pv).sum(), cum.sum(axis=1), np.square(cum).sum(axis=1)))
        return out

    parts = _map_blocks(summarise, intensities, n_paths, seed, t_max, block_size, threads)
    results = []
    for i, p in enumerate(policies):
        s1 = sum(part[i][0] for part in parts)
        s2 = sum(part[i][1] for part in parts)
        c1 = sum(part[i][2] for part in parts)
        c2 = sum(part[i][3] for part in parts)
        mean, se = _mean_se(s1, s2, n_paths)
        cmean, cse = _mean_se(c1, c2, n_paths)
        results.append(PolicyValueEstimate(p.label, float(mean), float(se), n_paths, cum_times, cmean, cse))
    return results


def _mean_se(s1, s2, n):
    mean = s1 / n
    if n < 2:
        return mean, np.zeros_like(mean) if np.ndim(mean) else 0.0
    var = np.maximum(s2 - n * np.square(mean), 0.0) / (n - 1)
    return mean, np.sqrt(var / n)


def estimate_policy_value(intensities: IntensitySet, policy: PolicySpec, rate, n_paths: int,
                          t_max: float = 125.0, seed: int = 0, **kwargs) -> PolicyValueEstimate:
    return estimate_policy_values(intensities, [policy], rate, n_paths, t_max, seed, **kwargs)[0]
