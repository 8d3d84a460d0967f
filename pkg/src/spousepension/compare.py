"""Side-by-side analytic vs Monte Carlo comparison with z-scores.

For probabilities and histogram bins the standard error is the one implied
by the analytic value (binomial with the analytic probability), which does not
blow up when the simulation happens to see no events. A z-score is only
formed where the normal approximation is sound: at least ``MIN_EXPECTED``
expected events on both sides of the binomial. Policy values use the sample
standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .grid import interval_weights
from .marital import MaritalSolution
from .simulator import PolicyValueEstimate, SimulationEstimate
from .valuation import ValuationReport

MIN_EXPECTED = 5.0


@dataclass
class ComparisonRow:
    quantity: str
    t: float
    bin_lo: Optional[float]
    analytic: float
    mc: float
    se: float
    z: float             # nan where no test is made

    def as_tuple(self):
        return (self.quantity, self.t, self.bin_lo, self.analytic, self.mc, self.se, self.z)


HEADER = ["quantity", "t", "bin_lo", "analytic", "mc", "se", "z"]


def _binomial_row(quantity, t, bin_lo, p, mc_p, n, width=1.0) -> ComparisonRow:
    p = min(max(p, 0.0), 1.0)
    se = math.sqrt(p * (1 - p) / n) / width if n > 0 else math.nan
    testable = n > 0 and min(n * p, n * (1 - p)) >= MIN_EXPECTED
    z = (mc_p - p) / (se * width) if testable else math.nan
    return ComparisonRow(quantity, t, bin_lo, p / width, mc_p / width, se, z)


def marital_rows(solution: MaritalSolution, est: SimulationEstimate) -> List[ComparisonRow]:
    grid = solution.grid
    n = est.n_paths
    rows: List[ComparisonRow] = []
    for j, t in enumerate(est.g_times):
        rows.append(_binomial_row("g", t, None, float(np.interp(t, grid.t, solution.g)), est.g[j], n))
        n_layers = min(len(solution.layers), est.married_layers.shape[0])
        for k in range(n_layers):
            p = float(np.interp(t, grid.t, solution.layers[k].mass))
            rows.append(_binomial_row(f"married_{k + 1}", t, None, p, est.married_layers[k, j], n))
        singles = [solution.u0] + [layer.u for layer in solution.layers]
        for k in range(min(len(singles), est.single_layers.shape[0])):
            p = float(np.interp(t, grid.t, singles[k]))
            rows.append(_binomial_row(f"single_{k}", t, None, p, est.single_layers[k, j], n))

    for t, hist in est.f.items():
        i = int(round(t / grid.step))
        if not hist.available or solution.g[i] < solution.g_floor:
            continue
        for lo, hi, d in zip(hist.edges[:-1], hist.edges[1:], hist.density):
            p = float(interval_weights(grid.y, lo, hi) @ solution.f[i])
            width = hi - lo
            rows.append(_binomial_row("f", t, lo, p, d * width, hist.n, width))

    gamma = solution.intensities.gamma.node_rates(grid.t)
    prev = [solution.u0] + [layer.u for layer in solution.layers]
    for nu, hist in est.first_marriage.items():
        if nu > len(solution.layers):
            break
        density = prev[nu - 1] * gamma
        rows.extend(_hist_rows(f"marriage_time_{nu}", grid.t, density, hist, n))
    for nu, hist in est.exit_times.items():
        if nu > len(solution.layers):
            break
        rows.extend(_hist_rows(f"exit_time_{nu}", grid.t, solution.layers[nu - 1].exit_rate, hist, n))
    return rows


def _hist_rows(name, nodes, density, hist, n):
    for lo, hi, d in zip(hist.edges[:-1], hist.edges[1:], hist.density):
        if hi > nodes[-1] + 1e-9:
            break
        width = hi - lo
        p = float(interval_weights(nodes, lo, hi) @ density)
        yield _binomial_row(name, 0.5 * (lo + hi), lo, p, d * width, n, width)


def policy_rows(reports: Sequence[ValuationReport], estimates: Sequence[PolicyValueEstimate]) -> List[ComparisonRow]:
    rows = []
    for rep, est in zip(reports, estimates):
        z = (est.mean - rep.liability) / est.se if est.se > 0 else (0.0 if est.mean == rep.liability else math.inf)
        rows.append(ComparisonRow(f"liability_{est.label}", float(rep.cashflow.t[-1]), None,
                                  rep.liability, est.mean, est.se, z))
        for t, m, se in zip(est.cumulative_times, est.cumulative_mean, est.cumulative_se):
            a = float(np.interp(t, rep.cashflow.t, rep.cashflow.A))
            zc = (m - a) / se if se > 0 else (0.0 if m == a else math.inf)
            rows.append(ComparisonRow(f"cumulative_{est.label}", float(t), None, a, float(m), float(se), zc))
    return rows


def worst_z(rows: Sequence[ComparisonRow]) -> float:
    zs = [abs(r.z) for r in rows if not math.isnan(r.z)]
    return max(zs) if zs else 0.0
