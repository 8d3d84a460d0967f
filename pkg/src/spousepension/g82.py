"""Age-parameterised special case: no spouse longevity improvement and a minimum marriage age.

Time is the insured's age ``x``. Marriage and divorce intensities vanish up to
``a_min``. Because spouse mortality depends on age only, every survival ratio
factors as ``exp(L(start)) * exp(-L(end))`` of a single cumulative hazard, so
each layer reduces to running sums along lines of constant ``eta - x``
(the spouse's birth offset). This is a separate code path from the general
solver and is used to cross-check it.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .grid import GridSpec, cumulative_trapezoid, trapezoid_weights
from .intensities import (
    AgeAtMarriageDensity,
    DeathDensity,
    IntensityCurve,
    IntensitySet,
    MortalitySurface,
)
from .marital import (
    DEFAULT_EPS_TRUNC,
    DEFAULT_NU_CAP,
    G_FLOOR,
    MaritalLayer,
    MaritalSolution,
    TruncationError,
    solve_marital,
)

_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class G82Inputs:
    gamma: IntensityCurve          # marriage intensity by the insured's age
    sigma: IntensityCurve          # divorce intensity by the insured's age
    q_spouse: IntensityCurve       # spouse mortality by the spouse's age
    phi: AgeAtMarriageDensity      # spouse age at marriage given the insured's age
    a_min: float = 0.0
    death: Optional[DeathDensity] = None

    def __post_init__(self) -> None:
        if self.a_min < 0:
            raise ValueError(f"a_min must be nonnegative, got {self.a_min}")


def _floored_rates(curve: IntensityCurve, x: np.ndarray, a: float) -> np.ndarray:
    raw = np.asarray(curve.rate(x), dtype=float)
    if a <= 0:
        return raw
    out = np.where(x > a, raw, 0.0)
    # the trapezoid rule sees the jump at a as the average of both sides
    on_jump = np.isclose(x, a, rtol=0.0, atol=1e-9)
    out[on_jump] = 0.5 * raw[on_jump]
    return out


def _floored_cumulative(curve: IntensityCurve, x: np.ndarray, a: float) -> np.ndarray:
    """``int_a^x rate`` for ``x >= a``, zero below."""
    return np.asarray(curve.cumulative(np.maximum(x, a)), dtype=float) - float(curve.cumulative(a))


def _checked_exp(values: np.ndarray, what: str) -> np.ndarray:
    if values.size and np.max(np.abs(values)) > _EXP_LIMIT:
        raise FloatingPointError(f"{what} exponent exceeds {_EXP_LIMIT}; shorten the horizon")
    return np.exp(values)


def _diagonal_cumsum(K: np.ndarray, h: float) -> np.ndarray:
    """``out[i, j] = trapz_{k <= i} K[k, j - (i - k)]``, zero where the diagonal leaves the age range.

    Done by skewing rows so that diagonals become columns, summing, and skewing back.
    """
    n_x, n_e = K.shape
    # skewed[k, d] holds K[k, d + k - (n_x - 1)]: column d is the diagonal with offset d - (n_x - 1)
    width = n_e + n_x - 1
    skewed = np.zeros((n_x, width))
    for k in range(n_x):
        skewed[k, n_x - 1 - k: n_x - 1 - k + n_e] = K[k]
    summed = cumulative_trapezoid(skewed, h, axis=0)
    out = np.empty_like(K)
    for i in range(n_x):
        out[i] = summed[i, n_x - 1 - i: n_x - 1 - i + n_e]
    return out


def g82_solve(inputs: G82Inputs, grid: GridSpec, nu_cap: int = DEFAULT_NU_CAP,
              eps_trunc: float = DEFAULT_EPS_TRUNC) -> MaritalSolution:
    """Layer recursion in the insured's age ``x`` and the spouse's age ``eta``."""
    x, eta, h = grid.t, grid.y, grid.step
    a = inputs.a_min
    gamma = _floored_rates(inputs.gamma, x, a)
    sigma = _floored_rates(inputs.sigma, x, a)
    lam_gamma = _floored_cumulative(inputs.gamma, x, a)
    lam_sigma = _floored_cumulative(inputs.sigma, x, a)
    q = inputs.q_spouse.node_rates(eta)
    L = cumulative_trapezoid(q, h)                     # spouse cumulative hazard by age
    phi = np.vstack([inputs.phi.node_values(eta, xi) for xi in x])

    grow_sigma = _checked_exp(lam_sigma, "divorce")
    grow_gamma = _checked_exp(lam_gamma, "marriage")
    grow_L = _checked_exp(L, "spouse mortality")
    u0 = np.where(x <= a, 1.0, np.exp(-lam_gamma))
    w_eta = trapezoid_weights(eta.size, h)
    exit_rates = sigma[:, None] + q[None, :]

    layers: List[MaritalLayer] = []
    density_sum = np.zeros((x.size, eta.size))
    u_prev = u0
    residual = 0.0
    for nu in range(1, nu_cap + 1):
        # K[k, j]: contribution of marriage at x_k to spouse age eta_j at that moment
        K = (u_prev * gamma * grow_sigma)[:, None] * phi * grow_L[None, :]
        g_nu = _diagonal_cumsum(K, h) / grow_sigma[:, None] / grow_L[None, :]
        exit_rate = (g_nu * exit_rates) @ w_eta
        u_nu = cumulative_trapezoid(exit_rate * grow_gamma, h) / grow_gamma
        mass = g_nu @ w_eta
        density_sum += g_nu
        layers.append(MaritalLayer(nu, mass, exit_rate, u_prev, u_nu))
        residual = float(mass.max())
        if residual < eps_trunc:
            break
        u_prev = u_nu
    if residual >= eps_trunc:
        if residual > 100 * eps_trunc:
            raise TruncationError(f"layer {nu_cap} still carries mass {residual:.3e}")
        warnings.warn(f"series truncated at nu={nu_cap} with residual {residual:.3e}")

    g = density_sum @ w_eta
    f = np.full_like(density_sum, np.nan)
    ok = g >= G_FLOOR
    f[ok] = density_sum[ok] / g[ok, None]
    return MaritalSolution(
        grid=grid, layers=layers, u0=u0, g=g, density_sum=density_sum, f=f,
        nu_max_used=len(layers), truncation_residual=residual,
        intensities=to_general(inputs), axis_label="x",
        edge_density=float(density_sum[:, -1].max()),
    )


def to_general(inputs: G82Inputs) -> IntensitySet:
    """The same model for the general solver: time is age, no improvement, intensities off up to ``a_min``."""
    def floored(curve: IntensityCurve) -> IntensityCurve:
        return dataclasses.replace(curve, start=max(curve.start, inputs.a_min))

    return IntensitySet(
        gamma=floored(inputs.gamma),
        sigma=floored(inputs.sigma),
        q_spouse=MortalitySurface(inputs.q_spouse),
        phi=inputs.phi,
        death=inputs.death,
    )


@dataclass
class EquivalenceReport:
    max_dg: float
    max_df: float
    g_tol: float
    f_tol: float
    g82: MaritalSolution
    general: MaritalSolution

    @property
    def passed(self) -> bool:
        return self.max_dg <= self.g_tol and self.max_df <= self.f_tol


def check_equivalence(inputs: G82Inputs, grid: GridSpec, nu_cap: int = DEFAULT_NU_CAP,
                      eps_trunc: float = DEFAULT_EPS_TRUNC, g_tol: float = 1e-6, f_tol: float = 1e-5,
                      compare_floor: float = 1e-8) -> EquivalenceReport:
    """Solve both ways and report the largest differences in ``g`` and in ``f`` (where ``g >= compare_floor``)."""
    special = g82_solve(inputs, grid, nu_cap, eps_trunc)
    general = solve_marital(to_general(inputs), grid, nu_cap, eps_trunc)
    dg = float(np.max(np.abs(special.g - general.g)))
    rows = (special.g >= compare_floor) & (general.g >= compare_floor)
    df = float(np.max(np.abs(special.f[rows] - general.f[rows]))) if rows.any() else 0.0
    return EquivalenceReport(dg, df, g_tol, f_tol, special, general)
