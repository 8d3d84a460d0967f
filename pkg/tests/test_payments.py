import math

import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from spousepension.intensities import ConstantRate, ExponentialImprovement, GompertzMakeham, MortalitySurface
from spousepension.payments import (
    PolicyKind,
    PolicySpec,
    UnsupportedPolicyOperation,
    lump_sum_components,
    payment_rate_derivative,
    survive_to_age,
    total_lump_sum,
)

Q0 = MortalitySurface(ConstantRate(value=0.0, t_max=300))
Q2 = MortalitySurface(ConstantRate(value=0.02, t_max=300))
LIFELONG = PolicySpec(PolicyKind.LIFELONG, q_ad=Q2)
TERMINATING = PolicySpec(PolicyKind.TERMINATING, c=67.0, q_ad=Q2)
LUMP = PolicySpec(PolicyKind.LUMP_SUM, c=65.0, q_ad=Q2)


def test_policy_validation():
    with pytest.raises(ValueError):
        PolicySpec("lifelong", amount=0.0)
    with pytest.raises(ValueError):
        PolicySpec("terminating")
    with pytest.raises(ValueError):
        PolicySpec("lump_sum", c=-1.0)
    with pytest.raises(ValueError):
        PolicySpec("lifelong", c=60.0)
    assert PolicySpec("terminating", c=67).label == "terminating_c67"
    with pytest.raises(ValueError):
        PolicySpec("lifelong").spouse_mortality()
    assert PolicySpec("lifelong").spouse_mortality(Q2) is Q2


def test_annuity_rate_examples():
    assert payment_rate_derivative(PolicySpec("lifelong", q_ad=Q0), 3.0, 50.0, 9.0) == 1.0
    assert payment_rate_derivative(LIFELONG, 0.0, 60.0, 10.0) == pytest.approx(math.exp(-0.2), rel=1e-14)
    assert payment_rate_derivative(TERMINATING, 0.0, 60.0, 8.0) == 0.0
    assert payment_rate_derivative(PolicySpec("lifelong", amount=12.0, q_ad=Q2), 0.0, 60.0, 10.0) == \
        pytest.approx(12 * math.exp(-0.2))


def test_operations_reject_wrong_kind():
    with pytest.raises(UnsupportedPolicyOperation):
        payment_rate_derivative(LUMP, 0.0, 60.0, 1.0)
    with pytest.raises(UnsupportedPolicyOperation):
        lump_sum_components(LIFELONG, 0.0, stats.uniform(55, 5), 1.0)
    with pytest.raises(ValueError):
        payment_rate_derivative(LIFELONG, 5.0, 60.0, 1.0)


def test_lump_sum_everyone_past_trigger():
    deferred, immediate = lump_sum_components(LUMP, 0.0, stats.uniform(70, 10), 3.0)
    assert deferred == 0.0 and immediate == pytest.approx(1.0)


def test_lump_sum_unreachable_ages():
    # ages reaching 65 at t=2 were 63 at death; the density lives on [50, 55]
    deferred, immediate = lump_sum_components(LUMP, 0.0, stats.uniform(50, 5), 2.0)
    assert deferred == 0.0 and immediate == 0.0


def test_lump_sum_hand_value():
    deferred, immediate = lump_sum_components(LUMP, 0.0, stats.uniform(55, 5), 7.0)
    # (1/5) * e^{-0.14}
    assert deferred == pytest.approx(0.17387164707976116, rel=1e-12)
    assert immediate == 0.0


def test_lump_sum_accepts_plain_callable():
    deferred, immediate = lump_sum_components(LUMP, 0.0, lambda y: 0.2 if 55 <= y <= 60 else 0.0, 7.0)
    assert deferred == pytest.approx(0.2 * math.exp(-0.14)) and immediate == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("dist", [stats.uniform(55, 15), stats.truncnorm(-3, 3, loc=62, scale=2)])
def test_lump_sum_total_by_quadrature(dist):
    u = 4.0
    immediate = lump_sum_components(LUMP, u, dist, u)[1]
    deferred, _ = integrate.quad(lambda t: lump_sum_components(LUMP, u, dist, t)[0], u, u + 65, limit=400,
                                 points=[u + 65 - e for e in dist.support()])
    total = total_lump_sum(LUMP, u, dist)
    assert immediate + deferred == pytest.approx(total, rel=1e-6)
    assert total <= 1.0


def test_survive_to_age():
    assert survive_to_age(Q2, 0.0, 70.0, 65.0) == 1.0
    assert survive_to_age(Q2, 0.0, 60.0, 65.0) == pytest.approx(math.exp(-0.1))


gm = MortalitySurface(GompertzMakeham(alpha=0.0005, beta=0.00007, growth=0.09, t_max=300), ExponentialImprovement(0.01))


@given(st.floats(0, 50), st.floats(20, 90), st.floats(0, 40), st.floats(0, 40))
def test_annuity_rate_nonincreasing(u, y, d1, d2):
    a, b = sorted((d1, d2))
    pol = PolicySpec("lifelong", q_ad=gm)
    assert payment_rate_derivative(pol, u, y, u + b) <= payment_rate_derivative(pol, u, y, u + a) + 1e-15


@given(st.floats(0, 50), st.floats(20, 90), st.floats(0, 40))
def test_terminating_matches_lifelong_until_c(u, y, d):
    t = u + d
    life = payment_rate_derivative(LIFELONG, u, y, t)
    term = payment_rate_derivative(TERMINATING, u, y, t)
    assert term == (life if y + d <= 67.0 else 0.0)
