import os
from pathlib import Path

import pytest
from hypothesis import settings

from spousepension import (
    ConstantRate,
    GompertzMakeham,
    GridSpec,
    HazardDeathDensity,
    IntensitySet,
    MortalitySurface,
    UniformAgeDensity,
)

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def constant_set(gamma=0.1, sigma=0.0, q=0.0, lo=20.0, hi=40.0, death=0.04, q_t_max=300.0):
    return IntensitySet(
        gamma=ConstantRate(value=gamma),
        sigma=ConstantRate(value=sigma),
        q_spouse=MortalitySurface(ConstantRate(value=q, t_max=q_t_max)),
        phi=UniformAgeDensity(lo, hi),
        death=HazardDeathDensity(ConstantRate(value=death)),
    )


@pytest.fixture
def toy_set():
    """One marriage at most; the spouse cannot die while married."""
    return constant_set()


@pytest.fixture
def full_set():
    return constant_set(sigma=0.05, q=0.02)


@pytest.fixture
def q_ad():
    return MortalitySurface(ConstantRate(value=0.02, t_max=300.0))


@pytest.fixture
def gompertz():
    return GompertzMakeham(alpha=0.0005, beta=0.00007, growth=0.09, t_max=200.0)


@pytest.fixture
def small_grid():
    return GridSpec(0.1, 30.0, 80.0)
