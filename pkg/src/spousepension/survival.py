"""Survival factors built from the intensity curves.

Ratios such as ``l_t / l_v`` are always formed from the integral over
``[v, t]`` directly, never as a quotient of two exponentials, so long
horizons do not underflow.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .intensities import DomainError, IntensityCurve, MortalitySurface


def survival_factor(curve: IntensityCurve, a: float, b: float) -> float:
    """``exp(-int_a^b rate)``."""
    if a > b:
        raise ValueError(f"survival interval reversed: a={a} > b={b}")
    return float(np.exp(-curve.integrated(a, b)))


def spouse_hazard_along_life(surface: MortalitySurface, v: float, t: float, y: float) -> float:
    """``int_v^t q(r, y + r - t) dr``: hazard of a spouse aged ``y`` at ``t``, from ``v`` on."""
    if v > t:
        raise ValueError(f"survival interval reversed: v={v} > t={t}")
    age_at_v = y + v - t
    if age_at_v < -1e-12 or t < 0 or v < 0:
        raise DomainError(f"spouse age {age_at_v} at time {v} is negative")
    if v == t:
        return 0.0
    if surface.time_independent:
        return surface.base.integrated(max(age_at_v, 0.0), y)
    value, _ = integrate.quad(
        lambda r: surface.rate(r, y + r - t), v, t, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return value


def spouse_survival(surface: MortalitySurface, v: float, t: float, y: float) -> float:
    """Probability that a spouse alive at ``v`` with age ``y + v - t`` is still alive at ``t``."""
    return float(np.exp(-spouse_hazard_along_life(surface, v, t, y)))
