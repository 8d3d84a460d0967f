"""Shared time/age lattice and the trapezoid weights used on it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

_MULTIPLE_TOL = 1e-9


def _is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) <= _MULTIPLE_TOL * max(1.0, ratio)


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice shared by the time axis ``[0, t_max]`` and the age axis ``[0, y_max]``.

    A single step keeps the marriage kernel, which shifts age one-for-one with
    time, landing exactly on nodes.
    """

    step: float = 0.1
    t_max: float = 125.0
    y_max: float = 125.0

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        for name in ("t_max", "y_max"):
            value = getattr(self, name)
            if value < 0 or not _is_multiple(value, self.step):
                raise ValueError(f"grid.{name}={value} is not a nonnegative multiple of step {self.step}")

    @property
    def n_t(self) -> int:
        return int(round(self.t_max / self.step)) + 1

    @property
    def n_y(self) -> int:
        return int(round(self.y_max / self.step)) + 1

    @cached_property
    def t(self) -> np.ndarray:
        return np.arange(self.n_t) * self.step

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.n_y) * self.step

    def index_of(self, value: float) -> int:
        """Node index of ``value``, which must sit on the lattice."""
        if not _is_multiple(value, self.step):
            raise ValueError(f"{value} is not on the grid with step {self.step}")
        return int(round(value / self.step))


def trapezoid_weights(n: int, step: float) -> np.ndarray:
    """Composite trapezoid weights for ``n`` equally spaced nodes."""
    if n <= 1:
        return np.zeros(max(n, 0))
    w = np.full(n, step)
    w[0] = w[-1] = 0.5 * step
    return w


def interval_weights(nodes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Weights ``w`` with ``w @ f == integral over [lo, hi]`` of the linear interpolant of ``f``.

    Reduces to trapezoid weights when ``lo`` and ``hi`` are nodes. Parts of the
    interval outside the node range contribute nothing.
    """
    nodes = np.asarray(nodes, dtype=float)
    w = np.zeros(nodes.size)
    lo = max(lo, nodes[0])
    hi = min(hi, nodes[-1])
    if hi <= lo:
        return w
    left = nodes[:-1]
    right = nodes[1:]
    a = np.clip(lo, left, right)
    b = np.clip(hi, left, right)
    width = right - left
    # exact integral of the hat functions over [a, b] within each cell
    # basis at left node: (right - x)/width, at right node: (x - left)/width
    int_left = ((right - a) ** 2 - (right - b) ** 2) / (2 * width)
    int_right = ((b - left) ** 2 - (a - left) ** 2) / (2 * width)
    np.add.at(w, np.arange(nodes.size - 1), int_left)
    np.add.at(w, np.arange(1, nodes.size), int_right)
    return w


def cumulative_trapezoid(values: np.ndarray, step: float, axis: int = -1) -> np.ndarray:
    """Running trapezoid integral starting at 0 (same shape as ``values``)."""
    values = np.asarray(values, dtype=float)
    v = np.moveaxis(values, axis, -1)
    out = np.zeros_like(v)
    if v.shape[-1] > 1:
        out[..., 1:] = np.cumsum(0.5 * step * (v[..., 1:] + v[..., :-1]), axis=-1)
    return np.moveaxis(out, -1, axis)


def diagonal_trapezoid(source: np.ndarray, step_survival, h: float) -> np.ndarray:
    """Trapezoid in time of ``source`` transported along unit-slope age diagonals.

    ``out[i, j] = trapz over k in [0, i] of source[k, j - (i - k)] * S(k -> i)``,
    where ``S`` multiplies ``step_survival[m, j']`` (the factor for moving from
    node ``(m, j')`` to ``(m + 1, j' + 1)``) along the diagonal. Age nodes that
    would come from below age 0 contribute nothing; mass moving past the last
    age node is dropped.
    """
    n_t, n_y = source.shape
    out = np.zeros_like(source)
    running = 0.5 * h * source[0]
    for i in range(1, n_t):
        nxt = np.empty(n_y)
        nxt[0] = 0.0
        nxt[1:] = running[:-1] * step_survival[i - 1]
        nxt += h * source[i]
        out[i] = nxt - 0.5 * h * source[i]
        running = nxt
    return out
