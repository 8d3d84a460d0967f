"""Cashflows and liabilities of spouse's pensions under a marital marked point process."""

from .grid import GridSpec
from .intensities import (
    ConstantRate,
    DomainError,
    ExponentialImprovement,
    GompertzMakeham,
    HazardDeathDensity,
    IntensitySet,
    MortalitySurface,
    PiecewiseLinearRate,
    TabulatedAgeDensity,
    TabulatedDeathDensity,
    TabulatedImprovement,
    TruncatedNormalAgeDensity,
    UniformAgeDensity,
)
from .marital import MaritalSolution, TruncationError, marriage_probability, solve_marital, spouse_age_density
from .payments import PolicyKind, PolicySpec
from .valuation import ShortRate, cashflow, expected_cumulative, liability, portfolio_value, value_policy

__all__ = [
    "GridSpec", "ConstantRate", "DomainError", "ExponentialImprovement", "GompertzMakeham",
    "HazardDeathDensity", "IntensitySet", "MortalitySurface", "PiecewiseLinearRate",
    "TabulatedAgeDensity", "TabulatedDeathDensity", "TabulatedImprovement", "TruncatedNormalAgeDensity",
    "UniformAgeDensity", "MaritalSolution", "TruncationError", "marriage_probability", "solve_marital",
    "spouse_age_density", "PolicyKind", "PolicySpec", "ShortRate", "cashflow", "expected_cumulative",
    "liability", "portfolio_value", "value_policy",
]
