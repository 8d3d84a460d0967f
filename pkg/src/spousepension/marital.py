"""Marriage probability and spouse-age density from the marriage/divorce/death intensities.

The layer densities ``g_nu(y|t)`` (married for the nu-th time, spouse aged
``y``) and single probabilities ``u_nu(t)`` satisfy a coupled recursion:

    g_nu(y|t) = int_0^t u_{nu-1}(v) gamma(v) phi(y+v-t|v) S_sigma(v,t) S_spouse(v,t;y) dv
    u_nu(t)   = int_0^t [int g_nu(y|v) (sigma(v) + q(v,y)) dy] S_gamma(v,t) dv

with ``u_0(t) = exp(-int_0^t gamma)``. Both time integrals are composite
trapezoids over the lattice. Because age advances one node per time step,
the trapezoid sum for every ``(t_i, y_j)`` can be carried along the diagonal
``(t_i - k, y_j - k)`` and updated in O(n_y) per time step instead of
re-summed from scratch.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .grid import GridSpec, diagonal_trapezoid, trapezoid_weights
from .intensities import DomainError, IntensitySet

logger = logging.getLogger(__name__)

G_FLOOR = 1e-12
DEFAULT_NU_CAP = 20
DEFAULT_EPS_TRUNC = 1e-10


class TruncationError(RuntimeError):
    """The layer series had not decayed below tolerance at the layer cap."""


class UndefinedConditionalError(ValueError):
    """Conditional spouse-age density requested where the marriage probability is ~0."""


@dataclass
class MaritalLayer:
    nu: int
    mass: np.ndarray          # int g_nu(y|t) dy, per t
    exit_rate: np.ndarray     # density of the time of leaving m_nu
    u_prev: np.ndarray        # u_{nu-1}(t)
    u: np.ndarray             # u_nu(t)
    density: Optional[np.ndarray] = None  # g_nu(y|t), kept on request


@dataclass
class MaritalSolution:
    grid: GridSpec
    layers: List[MaritalLayer]
    u0: np.ndarray
    g: np.ndarray
    density_sum: np.ndarray   # sum_nu g_nu(y|t) = g(t) f(y|t)
    f: np.ndarray             # NaN where g(t) < g_floor
    nu_max_used: int
    truncation_residual: float
    intensities: Optional[IntensitySet] = None
    g_floor: float = G_FLOOR
    edge_density: float = 0.0
    axis_label: str = "t"
    meta: dict = field(default_factory=dict)

    @property
    def u_total(self) -> np.ndarray:
        total = self.u0.copy()
        for layer in self.layers:
            total += layer.u
        return total

    def conservation_error(self) -> np.ndarray:
        return self.u_total + self.g - 1.0

    def defined(self) -> np.ndarray:
        return self.g >= self.g_floor


@dataclass
class _Kernel:
    """Per-grid quantities reused by every layer."""

    grid: GridSpec
    gamma: np.ndarray         # gamma at t nodes
    gamma_step: np.ndarray    # exp(-int gamma) over each time cell
    sigma_step: np.ndarray
    spouse_step: np.ndarray   # spouse survival from (t_i, y_j) to (t_i+1, y_j+1)
    exit_rates: np.ndarray    # sigma(t) + q(t, y) on the grid
    phi: np.ndarray           # phi(y|t) node values
    u0: np.ndarray
    y_weights: np.ndarray


def _build_kernel(intensities: IntensitySet, grid: GridSpec) -> _Kernel:
    t, y, h = grid.t, grid.y, grid.step
    gamma_cum = np.asarray(intensities.gamma.cumulative(t))
    sigma_cum = np.asarray(intensities.sigma.cumulative(t))
    q = intensities.q_spouse.node_rates(t, y)
    spouse_step = np.exp(-0.5 * h * (q[:-1, :-1] + q[1:, 1:]))
    phi = np.vstack([intensities.phi.node_values(y, ti) for ti in t])
    return _Kernel(
        grid=grid,
        gamma=intensities.gamma.node_rates(t),
        gamma_step=np.exp(-np.diff(gamma_cum)),
        sigma_step=np.exp(-np.diff(sigma_cum)),
        spouse_step=spouse_step,
        exit_rates=intensities.sigma.node_rates(t)[:, None] + q,
        phi=phi,
        u0=np.exp(-gamma_cum),
        y_weights=trapezoid_weights(grid.n_y, h),
    )


def compute_g_nu_layer(u_prev: np.ndarray, intensities: IntensitySet, grid: GridSpec,
                       kernel: Optional[_Kernel] = None) -> np.ndarray:
    """Density grid ``g_nu(y|t)`` of the nu-th marriage given ``u_{nu-1}``."""
    kernel = kernel or _build_kernel(intensities, grid)
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != (grid.n_t,):
        raise ValueError(f"u_prev has shape {u_prev.shape}, grid needs ({grid.n_t},)")
    if not np.any(u_prev):
        return np.zeros((grid.n_t, grid.n_y))
    source = (u_prev * kernel.gamma)[:, None] * kernel.phi
    step = kernel.spouse_step * kernel.sigma_step[:, None]
    return diagonal_trapezoid(source, step, grid.step)


def _exit_and_single(g_nu: np.ndarray, kernel: _Kernel):
    h = kernel.grid.step
    exit_rate = (g_nu * kernel.exit_rates) @ kernel.y_weights
    u = np.zeros_like(exit_rate)
    running = 0.5 * h * exit_rate[0]
    for i in range(1, exit_rate.size):
        running = running * kernel.gamma_step[i - 1] + h * exit_rate[i]
        u[i] = running - 0.5 * h * exit_rate[i]
    return exit_rate, u


def compute_u_nu_layer(g_nu: np.ndarray, intensities: IntensitySet, grid: GridSpec,
                       kernel: Optional[_Kernel] = None) -> np.ndarray:
    """Probability ``u_nu(t)`` of being single for the nu-th time."""
    kernel = kernel or _build_kernel(intensities, grid)
    if g_nu.shape != (grid.n_t, grid.n_y):
        raise ValueError(f"g_nu has shape {g_nu.shape}, grid needs ({grid.n_t}, {grid.n_y})")
    return _exit_and_single(g_nu, kernel)[1]


def solve_marital(intensities: IntensitySet, grid: GridSpec, nu_cap: int = DEFAULT_NU_CAP,
                  eps_trunc: float = DEFAULT_EPS_TRUNC, keep_layers: bool = False) -> MaritalSolution:
    """Solve the layer recursion until the newest layer carries less than ``eps_trunc``.

    Raises:
        TruncationError: the layer at ``nu_cap`` still has mass above ``100 * eps_trunc``.
    """
    if nu_cap < 1:
        raise ValueError("nu_cap must be >= 1")
    if not eps_trunc > 0:
        raise ValueError("eps_trunc must be positive")
    kernel = _build_kernel(intensities, grid)
    w = kernel.y_weights
    density_sum = np.zeros((grid.n_t, grid.n_y))
    layers: List[MaritalLayer] = []
    u_prev = kernel.u0
    residual = 0.0
    for nu in range(1, nu_cap + 1):
        g_nu = compute_g_nu_layer(u_prev, intensities, grid, kernel)
        mass = g_nu @ w
        exit_rate, u_nu = _exit_and_single(g_nu, kernel)
        density_sum += g_nu
        layers.append(MaritalLayer(nu, mass, exit_rate, u_prev, u_nu, g_nu if keep_layers else None))
        residual = float(mass.max())
        logger.debug("layer %d: max mass %.3e", nu, residual)
        if residual < eps_trunc:
            break
        u_prev = u_nu
    if residual >= eps_trunc:
        if residual > 100 * eps_trunc:
            raise TruncationError(
                f"layer {nu_cap} still carries mass {residual:.3e} > 100 * eps_trunc ({eps_trunc:g})"
            )
        warnings.warn(f"marital series truncated at nu={nu_cap} with residual {residual:.3e}")

    g = density_sum @ w
    defined = g >= G_FLOOR
    f = np.full_like(density_sum, np.nan)
    f[defined] = density_sum[defined] / g[defined, None]
    edge = float(density_sum[:, -1].max()) if grid.n_y else 0.0
    if edge > 1e-8:
        logger.warning("spouse-age density %.3e at y_max=%g; mass is leaving the age grid", edge, grid.y_max)
    return MaritalSolution(
        grid=grid,
        layers=layers,
        u0=kernel.u0,
        g=g,
        density_sum=density_sum,
        f=f,
        nu_max_used=len(layers),
        truncation_residual=residual,
        intensities=intensities,
        edge_density=edge,
    )


def marriage_probability(solution: MaritalSolution, t: float) -> float:
    grid = solution.grid
    if t < 0 or t > grid.t_max * (1 + 1e-12):
        raise DomainError(f"t={t} outside [0, {grid.t_max}]")
    return float(np.interp(t, grid.t, solution.g))


def spouse_age_density(solution: MaritalSolution, t: float, y):
    """Conditional density ``f(y|t)``, bilinear between grid nodes."""
    grid = solution.grid
    y_arr = np.asarray(y, dtype=float)
    if t < 0 or t > grid.t_max * (1 + 1e-12):
        raise DomainError(f"t={t} outside [0, {grid.t_max}]")
    if y_arr.size and (y_arr.min() < 0 or y_arr.max() > grid.y_max * (1 + 1e-12)):
        raise DomainError(f"y outside [0, {grid.y_max}]")
    pos = t / grid.step
    i0 = min(int(np.floor(pos + 1e-9)), grid.n_t - 1)
    frac = pos - i0
    rows = [(i0, 1.0 - frac)]
    if frac > 1e-9 and i0 + 1 < grid.n_t:
        rows.append((i0 + 1, frac))
    out = np.zeros_like(y_arr)
    for i, weight in rows:
        if solution.g[i] < solution.g_floor:
            raise UndefinedConditionalError(
                f"marriage probability {solution.g[i]:.3e} at t={grid.t[i]} is below the floor"
            )
        out = out + weight * np.interp(y_arr, grid.y, solution.f[i])
    return out if out.ndim else float(out)
