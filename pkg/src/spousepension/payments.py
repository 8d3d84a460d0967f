"""Payment functions for the three spouse's pension products.

Every product pays nothing before the insured dies; the operations below are
only defined for ``t >= u`` where ``u`` is the insured's time of death and
``y`` the spouse's age at that moment.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from .intensities import MortalitySurface
from .survival import spouse_survival


class PolicyKind(str, Enum):
    LIFELONG = "lifelong"          # annuity while the spouse lives
    TERMINATING = "terminating"    # annuity while the spouse lives and is at most age c
    LUMP_SUM = "lump_sum"          # one payment when the spouse reaches age c alive


class UnsupportedPolicyOperation(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    amount: float = 1.0
    c: Optional[float] = None
    q_ad: Optional[MortalitySurface] = None
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if not self.amount > 0:
            raise ValueError(f"policy amount must be positive, got {self.amount}")
        if self.kind is PolicyKind.LIFELONG:
            if self.c is not None:
                raise ValueError("lifelong annuity takes no age c")
        elif self.c is None or self.c < 0:
            raise ValueError(f"{self.kind.value} policy needs an age c >= 0")

    @property
    def is_annuity(self) -> bool:
        return self.kind is not PolicyKind.LUMP_SUM

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return self.kind.value if self.c is None else f"{self.kind.value}_c{self.c:g}"

    def spouse_mortality(self, default: Optional[MortalitySurface] = None) -> MortalitySurface:
        surface = self.q_ad or default
        if surface is None:
            raise ValueError("policy has no post-death spouse mortality and no default was given")
        return surface


def payment_rate_derivative(policy: PolicySpec, u: float, y: float, t: float,
                            q_ad: Optional[MortalitySurface] = None) -> float:
    """Time derivative of the expected cumulative annuity payment, per year."""
    if not policy.is_annuity:
        raise UnsupportedPolicyOperation("a lump sum has no annuity payment rate; use lump_sum_components")
    if t < u:
        raise ValueError(f"payments start at the insured's death: t={t} < u={u}")
    if policy.kind is PolicyKind.TERMINATING and y + t - u > policy.c:
        return 0.0
    surface = policy.spouse_mortality(q_ad)
    return policy.amount * spouse_survival(surface, u, t, y + t - u)


def _tail_mass(f_u, c: float) -> float:
    if hasattr(f_u, "sf"):
        return float(f_u.sf(c))
    value, _ = integrate.quad(_as_pdf(f_u), c, np.inf, limit=200)
    return value


def _as_pdf(f_u) -> Callable[[float], float]:
    return f_u.pdf if hasattr(f_u, "pdf") else f_u


def lump_sum_components(policy: PolicySpec, u: float, f_u, t: float,
                        q_ad: Optional[MortalitySurface] = None) -> Tuple[float, float]:
    """Split the lump-sum cashflow for insured death time ``u`` into (deferred rate at t, immediate payment).

    ``f_u`` is the spouse-age density at ``u``: a callable, or any object with
    ``pdf`` (and optionally ``sf``), such as a frozen ``scipy.stats`` distribution.
    The deferred rate comes from spouses who reach age ``c`` exactly at ``t``;
    the immediate part is paid at ``u`` to spouses already aged ``c`` or older.
    """
    if policy.kind is not PolicyKind.LUMP_SUM:
        raise UnsupportedPolicyOperation("only lump-sum policies have an immediate component")
    if t < u:
        raise ValueError(f"payments start at the insured's death: t={t} < u={u}")
    c = policy.c
    immediate = policy.amount * _tail_mass(f_u, c)
    age_at_death = c + u - t
    if age_at_death < 0 or t == u:
        return 0.0, immediate
    density = float(_as_pdf(f_u)(age_at_death))
    if density == 0.0:
        return 0.0, immediate
    surface = policy.spouse_mortality(q_ad)
    deferred = policy.amount * density * spouse_survival(surface, u, t, c)
    return deferred, immediate


def survive_to_age(surface: MortalitySurface, u: float, y: float, c: float) -> float:
    """Probability a spouse aged ``y`` at time ``u`` reaches age ``c`` (1 if already there)."""
    if y >= c:
        return 1.0
    return spouse_survival(surface, u, u + c - y, c)


def total_lump_sum(policy: PolicySpec, u: float, f_u, q_ad: Optional[MortalitySurface] = None) -> float:
    """Expected total lump-sum payment for a death at ``u``: immediate part plus deferred part."""
    surface = policy.spouse_mortality(q_ad)
    pdf = _as_pdf(f_u)
    c = policy.c
    deferred, _ = integrate.quad(lambda y: pdf(y) * survive_to_age(surface, u, y, c), 0.0, c, limit=200)
    return policy.amount * (_tail_mass(f_u, c) + deferred)
