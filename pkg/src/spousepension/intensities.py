"""Hazard curves, spouse mortality surfaces and the densities that drive the marital model.

Time is measured in years and every rate is per year. Curves are immutable;
all evaluation methods are vectorised over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr, ndtri


DEFAULT_T_MAX = 125.0
DEFAULT_STEP = 0.1
_EDGE_TOL = 1e-9


class DomainError(ValueError):
    """Evaluation requested outside the domain of a curve or surface."""


def _check_domain(t: np.ndarray, t_max: float, what: str = "t") -> None:
    if t.size and (np.nanmin(t) < -_EDGE_TOL or np.nanmax(t) > t_max + _EDGE_TOL * max(1.0, t_max)):
        raise DomainError(f"{what} outside [0, {t_max}]: range [{np.nanmin(t)}, {np.nanmax(t)}]")


# ---------------------------------------------------------------------------
# intensity curves


@dataclass(frozen=True)
class IntensityCurve:
    """A nonnegative rate on ``[0, t_max]``.

    ``start`` switches the curve off: the rate is zero for ``t <= start``. This
    is how a lower age bound for marriage is expressed.
    """

    t_max: float = field(default=DEFAULT_T_MAX, kw_only=True)
    start: float = field(default=0.0, kw_only=True)

    def _raw_rate(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _raw_cumulative(self, t: np.ndarray) -> np.ndarray:
        """Integral of the raw rate over ``[0, t]``."""
        raise NotImplementedError

    def rate(self, t):
        t_arr = np.asarray(t, dtype=float)
        _check_domain(t_arr, self.t_max)
        out = self._raw_rate(t_arr)
        if self.start > 0:
            out = np.where(t_arr <= self.start, 0.0, out)
        return out if out.ndim else float(out)

    def cumulative(self, t):
        """Integrated rate over ``[0, t]``."""
        t_arr = np.asarray(t, dtype=float)
        _check_domain(t_arr, self.t_max)
        if self.start > 0:
            s = np.asarray(self.start)
            out = self._raw_cumulative(np.maximum(t_arr, s)) - self._raw_cumulative(s)
        else:
            out = self._raw_cumulative(t_arr)
        return out if np.ndim(out) else float(out)

    def integrated(self, a: float, b: float) -> float:
        if a > b:
            raise ValueError(f"integration bounds reversed: a={a} > b={b}")
        if a == b:
            _check_domain(np.asarray([a]), self.t_max)
            return 0.0
        return float(self.cumulative(b) - self.cumulative(a))

    def node_rates(self, nodes: np.ndarray) -> np.ndarray:
        """Rates at quadrature nodes.

        A node sitting exactly on ``start`` gets the mean of the one-sided
        limits so the trapezoid rule stays exact across the switch-on jump.
        """
        nodes = np.asarray(nodes, dtype=float)
        out = np.asarray(self.rate(nodes), dtype=float).copy()
        if self.start > 0:
            on_jump = np.isclose(nodes, self.start, rtol=0.0, atol=1e-9)
            out[on_jump] = 0.5 * self._raw_rate(nodes[on_jump])
        return out


@dataclass(frozen=True)
class ConstantRate(IntensityCurve):
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"rate must be nonnegative, got {self.value}")

    def _raw_rate(self, t):
        return np.full(np.shape(t), float(self.value))

    def _raw_cumulative(self, t):
        return self.value * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class PiecewiseLinearRate(IntensityCurve):
    """Linear interpolation between ``(time, rate)`` knots, flat outside them."""

    knots: tuple = ()

    def __post_init__(self) -> None:
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        if not knots:
            raise ValueError("piecewise-linear curve needs at least one knot")
        times = np.array([k[0] for k in knots])
        if np.any(np.diff(times) <= 0):
            raise ValueError("piecewise-linear knots must be strictly increasing")
        if any(k[1] < 0 for k in knots):
            raise ValueError("piecewise-linear rates must be nonnegative")
        object.__setattr__(self, "knots", knots)

    @cached_property
    def _table(self):
        xs = np.array([k[0] for k in self.knots])
        vs = np.array([k[1] for k in self.knots])
        if xs[0] > 0:
            xs = np.concatenate([[0.0], xs])
            vs = np.concatenate([[vs[0]], vs])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xs) * (vs[1:] + vs[:-1]))])
        return xs, vs, cum

    def _raw_rate(self, t):
        xs, vs, _ = self._table
        return np.interp(t, xs, vs)

    def _raw_cumulative(self, t):
        xs, vs, cum = self._table
        t = np.asarray(t, dtype=float)
        i = np.clip(np.searchsorted(xs, t, side="right") - 1, 0, xs.size - 1)
        return cum[i] + 0.5 * (t - xs[i]) * (vs[i] + np.interp(t, xs, vs))


@dataclass(frozen=True)
class GompertzMakeham(IntensityCurve):
    """``alpha + beta * exp(growth * t)``.

    The integrated hazard is a composite trapezoid on the global lattice of
    width ``step`` so it matches the quadrature used for tabulated surfaces.
    """

    alpha: float = 0.0
    beta: float = 0.0
    growth: float = 0.0
    step: float = DEFAULT_STEP

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("Gompertz-Makeham alpha and beta must be nonnegative")
        if not self.step > 0:
            raise ValueError("Gompertz-Makeham step must be positive")

    def _raw_rate(self, t):
        return self.alpha + self.beta * np.exp(self.growth * np.asarray(t, dtype=float))

    @cached_property
    def _lattice(self):
        n = int(np.ceil(self.t_max / self.step)) + 2
        nodes = np.arange(n) * self.step
        r = self._raw_rate(nodes)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * self.step * (r[1:] + r[:-1]))])
        return nodes, cum

    def _raw_cumulative(self, t):
        nodes, cum = self._lattice
        t = np.asarray(t, dtype=float)
        k = np.clip(np.floor(t / self.step + 1e-12).astype(int), 0, nodes.size - 2)
        left = nodes[k]
        return cum[k] + 0.5 * (t - left) * (self._raw_rate(left) + self._raw_rate(t))


@dataclass(frozen=True)
class ShiftedRate(IntensityCurve):
    """``base`` read from ``offset`` onwards: ``rate(t) = base.rate(offset + t)``."""

    base: IntensityCurve = None
    offset: float = 0.0

    def _raw_rate(self, t):
        return self.base._raw_rate(np.asarray(t, dtype=float) + self.offset)

    def _raw_cumulative(self, t):
        off = np.asarray(self.offset, dtype=float)
        return self.base._raw_cumulative(np.asarray(t, dtype=float) + off) - self.base._raw_cumulative(off)


def shifted(curve: IntensityCurve, offset: float) -> ShiftedRate:
    """Age-indexed ``curve`` re-expressed in time since age ``offset``."""
    if not 0 <= offset <= curve.t_max:
        raise DomainError(f"offset {offset} outside [0, {curve.t_max}]")
    return ShiftedRate(
        base=curve,
        offset=float(offset),
        t_max=curve.t_max - offset,
        start=max(0.0, curve.start - offset),
    )


def eval_rate(curve: IntensityCurve, t: float) -> float:
    return curve.rate(t)


def integrated_hazard(curve: IntensityCurve, a: float, b: float) -> float:
    return curve.integrated(a, b)


# ---------------------------------------------------------------------------
# spouse mortality


@dataclass(frozen=True)
class ExponentialImprovement:
    """Longevity factor ``exp(-rate * t)``."""

    rate: float = 0.0

    def __call__(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class TabulatedImprovement:
    knots: tuple = ()

    def __post_init__(self) -> None:
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        if not knots or any(v < 0 for _, v in knots):
            raise ValueError("improvement knots must be a nonempty list of nonnegative factors")
        if np.any(np.diff([k[0] for k in knots]) <= 0):
            raise ValueError("improvement knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)

    def __call__(self, t):
        xs = [k[0] for k in self.knots]
        vs = [k[1] for k in self.knots]
        return np.interp(np.asarray(t, dtype=float), xs, vs)


@dataclass(frozen=True)
class MortalitySurface:
    """Spouse death intensity ``q(t, y) = improvement(t) * base(y)``.

    ``base`` is indexed by age; ``improvement=None`` means no longevity
    improvement and a time-independent surface.
    """

    base: IntensityCurve
    improvement: Optional[Callable] = None

    @property
    def time_independent(self) -> bool:
        if self.improvement is None:
            return True
        return isinstance(self.improvement, ExponentialImprovement) and self.improvement.rate == 0

    def factor(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.improvement is None:
            return np.ones_like(t)
        return np.asarray(self.improvement(t), dtype=float)

    def rate(self, t, y):
        t_arr = np.asarray(t, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        if (t_arr.size and np.min(t_arr) < 0) or (y_arr.size and np.min(y_arr) < 0):
            raise DomainError("mortality surface needs t >= 0 and y >= 0")
        out = self.factor(t_arr) * self.base.rate(y_arr)
        return out if np.ndim(out) else float(out)

    def node_rates(self, t_nodes: np.ndarray, y_nodes: np.ndarray) -> np.ndarray:
        """Surface on the product grid, shape ``(len(t_nodes), len(y_nodes))``."""
        return np.outer(self.factor(t_nodes), self.base.node_rates(y_nodes))


def eval_surface(surface: MortalitySurface, t: float, y: float) -> float:
    return surface.rate(t, y)


# ---------------------------------------------------------------------------
# age-at-marriage densities


class AgeAtMarriageDensity:
    """Density ``phi(y | t)`` of the spouse's age when a marriage happens at time ``t``."""

    def pdf(self, y, t: float) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, y, t: float) -> np.ndarray:
        raise NotImplementedError

    def sample(self, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def node_values(self, y_nodes: np.ndarray, t: float) -> np.ndarray:
        """Values on an equally spaced age grid, as cell mass per unit age.

        Each node carries the probability of its cell ``[y - h/2, y + h/2]``,
        so a jump in the density costs O(h^2) under the trapezoid rule instead
        of O(h). The first node's half cell is divided by the full step: the
        solver carries node values along age diagonals, where the first node
        moves to interior nodes of weight ``h``, and dividing by ``h/2`` would
        double that mass. The last node keeps the trapezoid half weight.
        """
        y_nodes = np.asarray(y_nodes, dtype=float)
        if y_nodes.size < 2:
            return np.asarray(self.pdf(y_nodes, t), dtype=float)
        h = y_nodes[1] - y_nodes[0]
        lo = np.maximum(y_nodes - 0.5 * h, y_nodes[0])
        hi = np.minimum(y_nodes + 0.5 * h, y_nodes[-1])
        mass = self.cdf(hi, t) - self.cdf(lo, t)
        weights = np.full(y_nodes.size, h)
        weights[-1] = 0.5 * h
        return np.maximum(mass, 0.0) / weights


@dataclass(frozen=True)
class UniformAgeDensity(AgeAtMarriageDensity):
    """Uniform on ``[lo + slope*t, hi + slope*t]``, clipped at age 0."""

    lo: float
    hi: float
    slope: float = 0.0

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError(f"uniform age density needs hi > lo, got [{self.lo}, {self.hi}]")

    def bounds(self, t):
        t = np.asarray(t, dtype=float)
        lo = np.maximum(self.lo + self.slope * t, 0.0)
        hi = self.hi + self.slope * t
        if np.any(hi <= lo):
            raise DomainError("uniform age density has empty support at some t")
        return lo, hi

    def pdf(self, y, t):
        lo, hi = self.bounds(t)
        y = np.asarray(y, dtype=float)
        return np.where((y >= lo) & (y <= hi), 1.0 / (hi - lo), 0.0)

    def cdf(self, y, t):
        lo, hi = self.bounds(t)
        return np.clip((np.asarray(y, dtype=float) - lo) / (hi - lo), 0.0, 1.0)

    def sample(self, t, rng):
        lo, hi = self.bounds(t)
        return lo + (hi - lo) * rng.random(np.shape(t))


@dataclass(frozen=True)
class TruncatedNormalAgeDensity(AgeAtMarriageDensity):
    """Normal with mean ``mean + slope*t`` and sd ``sd``, truncated to ages >= 0."""

    mean: float
    sd: float
    slope: float = 0.0

    def __post_init__(self) -> None:
        if not self.sd > 0:
            raise ValueError("truncated normal needs sd > 0")

    def _params(self, t):
        mu = self.mean + self.slope * np.asarray(t, dtype=float)
        p0 = ndtr(-mu / self.sd)
        return mu, p0

    def pdf(self, y, t):
        mu, p0 = self._params(t)
        y = np.asarray(y, dtype=float)
        z = (y - mu) / self.sd
        dens = np.exp(-0.5 * z * z) / (self.sd * np.sqrt(2 * np.pi) * (1.0 - p0))
        return np.where(y >= 0, dens, 0.0)

    def cdf(self, y, t):
        mu, p0 = self._params(t)
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return (ndtr((y - mu) / self.sd) - p0) / (1.0 - p0)

    def sample(self, t, rng):
        mu, p0 = self._params(t)
        u = rng.random(np.shape(t))
        return np.maximum(mu + self.sd * ndtri(p0 + u * (1.0 - p0)), 0.0)


@dataclass(frozen=True)
class TabulatedAgeDensity(AgeAtMarriageDensity):
    """Density given on a ``(t, y)`` table: linear in ``y``, linear in ``t`` (flat outside).

    Each row is expected to integrate to one; see :func:`validate_age_density`.
    """

    t_knots: tuple
    y_knots: tuple
    values: tuple

    def __post_init__(self) -> None:
        t_k = np.asarray(self.t_knots, dtype=float).ravel()
        y_k = np.asarray(self.y_knots, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).reshape(t_k.size, y_k.size)
        if np.any(np.diff(t_k) <= 0) or np.any(np.diff(y_k) <= 0):
            raise ValueError("tabulated density knots must be strictly increasing")
        if y_k[0] < 0:
            raise ValueError("tabulated density ages must be nonnegative")
        if np.any(vals < 0):
            raise ValueError("tabulated density values must be nonnegative")
        object.__setattr__(self, "t_knots", tuple(t_k))
        object.__setattr__(self, "y_knots", tuple(y_k))
        object.__setattr__(self, "values", tuple(map(tuple, vals)))

    @cached_property
    def _arrays(self):
        return np.asarray(self.t_knots), np.asarray(self.y_knots), np.asarray(self.values)

    def _row_weights(self, t):
        t_k, _, _ = self._arrays
        t = np.clip(np.asarray(t, dtype=float), t_k[0], t_k[-1])
        if t_k.size == 1:
            return np.zeros(np.shape(t), dtype=int), np.zeros(np.shape(t))
        k = np.clip(np.searchsorted(t_k, t, side="right") - 1, 0, t_k.size - 2)
        w = (t - t_k[k]) / (t_k[k + 1] - t_k[k])
        return k, w

    def _row(self, t: float) -> np.ndarray:
        _, _, vals = self._arrays
        k, w = self._row_weights(t)
        k, w = int(k), float(w)
        if vals.shape[0] == 1:
            return vals[0]
        return (1 - w) * vals[k] + w * vals[k + 1]

    def pdf(self, y, t):
        _, y_k, _ = self._arrays
        return np.interp(np.asarray(y, dtype=float), y_k, self._row(t), left=0.0, right=0.0)

    def cdf(self, y, t):
        _, y_k, _ = self._arrays
        row = self._row(t)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(y_k) * (row[1:] + row[:-1]))])
        y = np.clip(np.asarray(y, dtype=float), y_k[0], y_k[-1])
        i = np.clip(np.searchsorted(y_k, y, side="right") - 1, 0, y_k.size - 2)
        return cum[i] + 0.5 * (y - y_k[i]) * (row[i] + np.interp(y, y_k, row))

    def sample(self, t, rng):
        _, y_k, vals = self._arrays
        t = np.asarray(t, dtype=float)
        k, w = self._row_weights(t)
        if vals.shape[0] > 1:
            k = k + (rng.random(t.shape) < w)
        widths = np.diff(y_k)
        cell_mass = 0.5 * widths * (vals[:, 1:] + vals[:, :-1])
        cum = np.cumsum(cell_mass, axis=1)
        cum /= cum[:, -1:]
        u = rng.random(t.shape)
        cell = np.empty(t.shape, dtype=int)
        for row in np.unique(k):
            sel = k == row
            cell[sel] = np.minimum(np.searchsorted(cum[row], u[sel], side="right"), y_k.size - 2)
        a = vals[k, cell]
        b = vals[k, cell + 1]
        width = widths[cell]
        v = rng.random(t.shape)
        # inverse cdf of a linear density on one cell
        slope = b - a
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(
                np.abs(slope) > 1e-14 * np.maximum(a + b, 1e-300),
                width * (np.sqrt(a * a + slope * (a + b) * v) - a) / slope,
                width * v,
            )
        return y_k[cell] + np.clip(x, 0.0, width)


def validate_age_density(phi: AgeAtMarriageDensity, t: float, tol: float,
                         step: float = DEFAULT_STEP, y_max: float = 250.0) -> bool:
    """True iff ``phi(.|t)`` integrates to one within ``tol`` under the solver's age quadrature.

    That quadrature sums the cell masses carried by :meth:`AgeAtMarriageDensity.node_values`.
    """
    y = np.arange(int(round(y_max / step)) + 1) * step
    try:
        density = np.asarray(phi.pdf(y, t), dtype=float)
        values = phi.node_values(y, t)
    except DomainError:
        return False
    if not (np.all(np.isfinite(density)) and np.all(np.isfinite(values))) or np.any(density < 0):
        return False
    weights = np.full(y.size, step)
    weights[-1] = 0.5 * step
    return abs(float(weights @ values) - 1.0) <= tol


@dataclass(frozen=True)
class ShiftedAgeDensity(AgeAtMarriageDensity):
    """``base`` indexed by the insured's age, read at age ``offset + t``."""

    base: AgeAtMarriageDensity
    offset: float

    def pdf(self, y, t):
        return self.base.pdf(y, np.asarray(t) + self.offset)

    def cdf(self, y, t):
        return self.base.cdf(y, np.asarray(t) + self.offset)

    def sample(self, t, rng):
        return self.base.sample(np.asarray(t, dtype=float) + self.offset, rng)


# ---------------------------------------------------------------------------
# insured death density


class DeathDensity:
    """Density ``h(u)`` of the insured's time of death; may be defective."""

    t_max: float

    def pdf(self, u) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, u) -> np.ndarray:
        raise NotImplementedError

    def node_values(self, nodes: np.ndarray) -> np.ndarray:
        return np.asarray(self.pdf(nodes), dtype=float)


@dataclass(frozen=True)
class HazardDeathDensity(DeathDensity):
    """``h(u) = mu(u) * exp(-int_0^u mu)`` for an insured mortality curve ``mu``."""

    hazard: IntensityCurve

    @property
    def t_max(self) -> float:
        return self.hazard.t_max

    def pdf(self, u):
        return self.hazard.rate(u) * np.exp(-self.hazard.cumulative(u))

    def cdf(self, u):
        return -np.expm1(-np.asarray(self.hazard.cumulative(u)))

    def node_values(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        return self.hazard.node_rates(nodes) * np.exp(-self.hazard.cumulative(nodes))


@dataclass(frozen=True)
class TabulatedDeathDensity(DeathDensity):
    """Piecewise-linear ``h`` through ``(u, h)`` knots, zero outside them."""

    knots: tuple

    def __post_init__(self) -> None:
        knots = tuple((float(a), float(b)) for a, b in self.knots)
        xs = np.array([k[0] for k in knots])
        vs = np.array([k[1] for k in knots])
        if xs.size < 2 or np.any(np.diff(xs) <= 0) or xs[0] < 0:
            raise ValueError("death density knots must be >= 2 strictly increasing nonnegative times")
        if np.any(vs < 0):
            raise ValueError("death density values must be nonnegative")
        total = float(np.sum(0.5 * np.diff(xs) * (vs[1:] + vs[:-1])))
        if total > 1 + 1e-9:
            raise ValueError(f"death density integrates to {total} > 1")
        object.__setattr__(self, "knots", knots)

    @property
    def t_max(self) -> float:
        return self.knots[-1][0]

    @cached_property
    def _table(self):
        xs = np.array([k[0] for k in self.knots])
        vs = np.array([k[1] for k in self.knots])
        cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(xs) * (vs[1:] + vs[:-1]))])
        return xs, vs, cum

    def pdf(self, u):
        xs, vs, _ = self._table
        out = np.interp(np.asarray(u, dtype=float), xs, vs, left=0.0, right=0.0)
        return out if np.ndim(out) else float(out)

    def cdf(self, u):
        xs, vs, cum = self._table
        u = np.clip(np.asarray(u, dtype=float), xs[0], xs[-1])
        i = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, xs.size - 2)
        return cum[i] + 0.5 * (u - xs[i]) * (vs[i] + np.interp(u, xs, vs))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntensitySet:
    gamma: IntensityCurve
    sigma: IntensityCurve
    q_spouse: MortalitySurface
    phi: AgeAtMarriageDensity
    death: Optional[DeathDensity] = None

    def __post_init__(self) -> None:
        for name, kind in (("gamma", IntensityCurve), ("sigma", IntensityCurve),
                           ("q_spouse", MortalitySurface), ("phi", AgeAtMarriageDensity)):
            if not isinstance(getattr(self, name), kind):
                raise TypeError(f"{name} must be a {kind.__name__}")
        if self.death is not None and not isinstance(self.death, DeathDensity):
            raise TypeError("death must be a DeathDensity")


def invert_cumulative(nodes: np.ndarray, cum: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Solve ``cum(tau) = target`` for a nondecreasing, linearly interpolated ``cum``.

    Returns ``inf`` where ``target`` exceeds the last tabulated value.
    """
    target = np.asarray(target, dtype=float)
    idx = np.searchsorted(cum, target, side="left")
    out = np.full(target.shape, np.inf)
    inside = idx < cum.size
    i = np.maximum(idx[inside], 1)
    c0 = cum[i - 1]
    c1 = cum[i]
    x0 = nodes[i - 1]
    x1 = nodes[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(c1 > c0, (target[inside] - c0) / (c1 - c0), 0.0)
    out[inside] = np.where(idx[inside] == 0, nodes[0], x0 + np.clip(frac, 0.0, 1.0) * (x1 - x0))
    return out

