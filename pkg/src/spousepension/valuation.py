"""Cashflow, expected cumulative payments and liability of a spouse's pension.

The cashflow at ``t`` integrates, over insured death times ``u <= t`` while
married (density ``h(u) g(u)``) and spouse ages (density ``f(y|u)``), the rate
at which the policy pays at ``t``. On the lattice this is a "survivor field":
the density, at time ``t`` and spouse age ``z``, of spouses still alive whose
insured died married before ``t``. Annuities integrate the field over ages,
and the lump sum reads it at age ``c``.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .grid import GridSpec, cumulative_trapezoid, diagonal_trapezoid, interval_weights, trapezoid_weights
from .intensities import (
    AgeAtMarriageDensity,
    ConstantRate,
    DeathDensity,
    DomainError,
    HazardDeathDensity,
    IntensityCurve,
    IntensitySet,
    MortalitySurface,
    ShiftedAgeDensity,
    shifted,
)
from .marital import DEFAULT_EPS_TRUNC, DEFAULT_NU_CAP, MaritalSolution, solve_marital
from .payments import PolicyKind, PolicySpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShortRate:
    """Deterministic short rate; ``discount(t) = exp(-int_0^t r)``."""

    curve: IntensityCurve

    @classmethod
    def constant(cls, r: float, t_max: float = 1000.0) -> "ShortRate":
        return cls(ConstantRate(value=r, t_max=t_max))

    def discount(self, t):
        return np.exp(-np.asarray(self.curve.cumulative(t)))


@dataclass
class CashflowCurve:
    t: np.ndarray
    a: np.ndarray                 # expected payment rate, includes the immediate lump-sum density
    A: np.ndarray                 # expected cumulative payments
    immediate: np.ndarray         # lump-sum part paid at the insured's death (zero for annuities)
    survivors_at_end: float = 0.0  # expected number of spouses still entitled at the horizon
    label: str = ""


@dataclass
class ValuationReport:
    liability: float
    cashflow: CashflowCurve
    discount: np.ndarray
    tail_bound: float
    params: dict = field(default_factory=dict)


def _survivor_field(solution: MaritalSolution, death_density: np.ndarray, q_ad: MortalitySurface) -> np.ndarray:
    grid = solution.grid
    married_deaths = death_density[:, None] * solution.density_sum
    q = q_ad.node_rates(grid.t, grid.y)
    step = np.exp(-0.5 * grid.step * (q[:-1, :-1] + q[1:, 1:]))
    return diagonal_trapezoid(married_deaths, step, grid.step)


def _column_at(matrix: np.ndarray, nodes: np.ndarray, x: float) -> np.ndarray:
    if x > nodes[-1] or x < nodes[0]:
        return np.zeros(matrix.shape[0])
    pos = np.interp(x, nodes, np.arange(nodes.size))
    j = min(int(np.floor(pos)), nodes.size - 1)
    frac = pos - j
    if frac < 1e-12 or j + 1 >= nodes.size:
        return matrix[:, j].copy()
    return (1 - frac) * matrix[:, j] + frac * matrix[:, j + 1]


def cashflow(solution: MaritalSolution, policy: PolicySpec, h: Optional[DeathDensity] = None,
             grid: Optional[GridSpec] = None) -> CashflowCurve:
    """Expected payment rate ``a(t)`` and cumulative payments ``A(t)`` on the solution's grid."""
    if grid is not None and grid != solution.grid:
        raise ValueError(f"grid {grid} does not match the marital solution grid {solution.grid}")
    grid = solution.grid
    intensities = solution.intensities
    h = h or (intensities.death if intensities else None)
    if h is None:
        raise ValueError("no insured death density given")
    if h.t_max < grid.t_max - 1e-9:
        raise DomainError(f"death density covers [0, {h.t_max}] but the grid runs to {grid.t_max}")
    q_ad = policy.spouse_mortality(intensities.q_spouse if intensities else None)

    hn = h.node_values(grid.t)
    field_ = _survivor_field(solution, hn, q_ad)
    immediate = np.zeros(grid.n_t)
    if policy.kind is PolicyKind.LUMP_SUM:
        deferred = policy.amount * _column_at(field_, grid.y, policy.c)
        tail = solution.density_sum @ interval_weights(grid.y, policy.c, np.inf)
        immediate = policy.amount * hn * tail
        a = deferred + immediate
        survivors = float(field_[-1] @ interval_weights(grid.y, 0.0, policy.c))
    else:
        upper = np.inf if policy.kind is PolicyKind.LIFELONG else policy.c
        weights = interval_weights(grid.y, 0.0, upper)
        a = policy.amount * (field_ @ weights)
        survivors = float(field_[-1] @ weights)
    A = cumulative_trapezoid(a, grid.step)
    return CashflowCurve(t=grid.t, a=a, A=A, immediate=immediate, survivors_at_end=survivors, label=policy.label)


def expected_cumulative(cf: CashflowCurve, t: float) -> float:
    if t < 0 or t > cf.t[-1] * (1 + 1e-12):
        raise DomainError(f"t={t} outside the cashflow horizon [0, {cf.t[-1]}]")
    return float(np.interp(t, cf.t, cf.A))


def liability(cf: CashflowCurve, rate: ShortRate) -> float:
    """Present value ``int discount(t) a(t) dt`` over the cashflow horizon."""
    disc = rate.discount(cf.t)
    step = cf.t[1] - cf.t[0] if cf.t.size > 1 else 0.0
    return float(trapezoid_weights(cf.t.size, step) @ (disc * cf.a))


def value_policy(solution: MaritalSolution, policy: PolicySpec, rate: ShortRate,
                 h: Optional[DeathDensity] = None) -> ValuationReport:
    cf = cashflow(solution, policy, h)
    disc = rate.discount(cf.t)
    L = liability(cf, rate)
    h = h or solution.intensities.death
    t_end = float(cf.t[-1])
    # payments beyond the horizon: deaths after it, and spouses still entitled at it
    r_end = float(rate.curve.rate(t_end))
    annuity_factor = 1.0 if policy.kind is PolicyKind.LUMP_SUM else (1.0 / r_end if r_end > 0 else np.inf)
    late_deaths = 1.0 - float(h.cdf(t_end))
    tail = policy.amount * float(disc[-1]) * (late_deaths + cf.survivors_at_end) * annuity_factor
    params = {"policy": policy.label, "kind": policy.kind.value, "amount": policy.amount,
              "c": policy.c, "t_max": t_end, "step": solution.grid.step}
    return ValuationReport(liability=L, cashflow=cf, discount=disc, tail_bound=tail, params=params)


# ---------------------------------------------------------------------------
# portfolios


@dataclass(frozen=True)
class AgeBasedModel:
    """Intensities indexed by the insured's age, shared by all members of a fund.

    The spouse mortality surface stays in calendar time (time from the
    valuation date), which is what makes results depend on the entry age.
    """

    gamma: IntensityCurve
    sigma: IntensityCurve
    q_spouse: MortalitySurface
    phi: AgeAtMarriageDensity
    insured_mortality: IntensityCurve
    max_age: float = 125.0

    def for_entry_age(self, x0: float) -> IntensitySet:
        return IntensitySet(
            gamma=shifted(self.gamma, x0),
            sigma=shifted(self.sigma, x0),
            q_spouse=self.q_spouse,
            phi=ShiftedAgeDensity(self.phi, x0),
            death=HazardDeathDensity(shifted(self.insured_mortality, x0)),
        )


@dataclass(frozen=True)
class Member:
    x0: float
    policy: PolicySpec
    weight: float = 1.0


@dataclass
class PortfolioResult:
    total: float
    reports: List[ValuationReport]


def worker_count(default: Optional[int] = None) -> int:
    env = os.environ.get("PENSION_ENGINE_THREADS")
    cap = int(env) if env else (default or os.cpu_count() or 1)
    return max(1, cap)


def portfolio_value(members: Sequence[Member], model: AgeBasedModel, rate: ShortRate,
                    step: float = 0.1, y_max: float = 125.0, nu_cap: int = DEFAULT_NU_CAP,
                    eps_trunc: float = DEFAULT_EPS_TRUNC, threads: Optional[int] = None) -> PortfolioResult:
    """Weighted sum of member liabilities; one marital solve per distinct entry age."""
    if not members:
        return PortfolioResult(0.0, [])
    for m in members:
        if not 0 <= m.x0 <= model.max_age:
            raise DomainError(f"entry age {m.x0} outside [0, {model.max_age}]")

    def solve(x0: float) -> MaritalSolution:
        horizon = np.floor((model.max_age - x0) / step + 1e-9) * step
        grid = GridSpec(step, float(round(horizon, 12)), y_max)
        return solve_marital(model.for_entry_age(x0), grid, nu_cap, eps_trunc)

    ages = sorted({m.x0 for m in members})
    with ThreadPoolExecutor(max_workers=threads or worker_count()) as pool:
        cache: Dict[float, MaritalSolution] = dict(zip(ages, pool.map(solve, ages)))
        reports = list(pool.map(lambda m: value_policy(cache[m.x0], m.policy, rate), members))
    total = float(sum(m.weight * r.liability for m, r in zip(members, reports)))
    return PortfolioResult(total, reports)
