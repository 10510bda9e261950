import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from motm.bs import OptionQuery, bs_implied_vol
from motm.energy import EnergyData
from motm.errors import DomainError, RegimeError, UnsupportedOrderError
from motm.expansions import (
    MOTMSchedule,
    implied_vol_expansion,
    log_price_first_order,
    log_price_refined,
    log_price_second_order,
    refined_order,
    second_order_skew_form,
)
from motm.heston import heston_call, heston_energy_derivs


@pytest.fixture(scope="module")
def e_fig2(fig2):
    return heston_energy_derivs(fig2)


def test_schedule_invariants():
    s = MOTMSchedule(0.4, 0.3)
    assert s.k(0.01) == pytest.approx(0.1004755, abs=1e-7)
    with pytest.raises(DomainError):
        MOTMSchedule(0.0, 0.3)
    for beta in (0.0, 0.5, 0.7, -0.1):
        with pytest.raises(RegimeError):
            MOTMSchedule(0.4, beta)
    with pytest.raises(DomainError):
        s.k(0.0)


def test_slowly_varying_factor():
    s = MOTMSchedule(0.4, 0.3, slowly_varying=lambda t: math.log(1.0 / t))
    t = 1e-3
    assert s.k(t) == pytest.approx(0.4 * math.log(1e3) * t**0.3)
    e = EnergyData(25.0, 0.0, 0.0, gamma0=1 / (math.sqrt(2 * math.pi) * 0.2))
    r = log_price_refined(e, s, t)
    assert r.log_term == pytest.approx((0.6 - 1.5) * math.log(1e3) - 2 * math.log(0.4 * math.log(1e3)))
    with pytest.raises(DomainError):
        MOTMSchedule(0.4, 0.3, slowly_varying=lambda t: -1.0).k(0.1)


def test_first_order_examples(e_fig2):
    r = log_price_first_order(e_fig2, MOTMSchedule(0.4, 0.3), 0.01)
    assert r.log_price == pytest.approx(-7.7181, abs=1e-3)
    assert r.order == "first" and r.cubic_term == 0.0 and r.higher_terms == ()
    assert log_price_first_order(e_fig2, MOTMSchedule(1e-12, 0.3), 0.01).log_price == pytest.approx(0.0, abs=1e-18)
    bs = EnergyData(25.0, 0.0)
    # -theta^2 t^(2 beta - 1) / (2 sigma^2) = -1 / (0.08 * 0.01)
    assert log_price_first_order(bs, MOTMSchedule(1.0, 0.25), 1e-4).log_price == pytest.approx(-1250.0, rel=1e-12)


def test_second_order_examples(e_fig2):
    r = log_price_second_order(e_fig2, MOTMSchedule(0.4, 0.3), 0.01)
    assert -r.cubic_term == pytest.approx(-1.3138, abs=1e-3)
    assert r.log_price == pytest.approx(-9.0319, abs=1e-3)
    flat = EnergyData(25.0, 0.0)
    s = MOTMSchedule(0.3, 0.2)
    assert log_price_second_order(flat, s, 0.02).log_price == log_price_first_order(flat, s, 0.02).log_price


def test_second_order_matches_heston_display(fig2, e_fig2):
    # -theta^2 t^(2 beta - 1) / (2 v0) + eta rho theta^3 / (4 v0^2 t^(1 - 3 beta))
    theta, beta, t = 0.4, 0.3, 0.01
    expected = (-theta**2 * t ** (2 * beta - 1) / (2 * fig2.v0)
                + fig2.eta * fig2.rho * theta**3 / (4 * fig2.v0**2 * t ** (1 - 3 * beta)))
    assert log_price_second_order(e_fig2, MOTMSchedule(theta, beta), t).log_price == pytest.approx(expected, rel=1e-12)


@given(st.floats(0.05, 2.0), st.floats(0.01, 0.33), st.floats(1e-8, 0.5))
def test_skew_form_agrees(theta, beta, t):
    e = EnergyData(15.29052, 77.743)
    s = MOTMSchedule(theta, beta)
    r = log_price_second_order(e, s, t)
    assert second_order_skew_form(e, s, t) == pytest.approx(r.log_price, rel=1e-12, abs=1e-12)


def test_second_order_regime(e_fig2):
    for beta in (1 / 3, 0.4):
        with pytest.raises(RegimeError, match=r"1/3"):
            log_price_second_order(e_fig2, MOTMSchedule(0.4, beta), 0.01)
        with pytest.raises(RegimeError):
            implied_vol_expansion(e_fig2, MOTMSchedule(0.4, beta), 0.01)


def test_refined_examples(e_fig2):
    r = log_price_refined(e_fig2, MOTMSchedule(0.4, 0.4), 1e-3)
    assert r.const_term == pytest.approx(-5.0099, abs=1e-3)
    assert r.const_term == pytest.approx(math.log(e_fig2.sigma0**3 / math.sqrt(2 * math.pi)), rel=1e-12)
    assert r.cubic_term == 0.0 and r.higher_terms == ()
    r3 = log_price_refined(e_fig2, MOTMSchedule(0.4, 0.3), 1e-3)
    assert r3.cubic_term > 0 and r3.higher_terms == ()
    r4 = log_price_refined(e_fig2, MOTMSchedule(0.4, 0.25), 1e-3)
    assert len(r4.higher_terms) == 1
    assert refined_order(0.4) == 2 and refined_order(0.3) == 3 and refined_order(0.25) == 4


def test_refined_unsupported_orders(e_fig2):
    with pytest.raises(UnsupportedOrderError, match="6"):
        log_price_refined(e_fig2, MOTMSchedule(0.4, 0.15), 1e-3)
    with pytest.raises(UnsupportedOrderError):
        log_price_refined(EnergyData(25.0, 1.0), MOTMSchedule(0.4, 0.4), 1e-3)
    with pytest.raises(UnsupportedOrderError):
        log_price_refined(EnergyData(25.0, 1.0, gamma0=2.0), MOTMSchedule(0.4, 0.25), 1e-3)


def test_refined_matches_heston_display(fig2, e_fig2):
    # second order terms + (3/2 - 2 beta) log t - 2 log theta + log(sigma0^3 / sqrt(2 pi))
    theta, beta, t = 0.4, 0.3, 1e-3
    second = log_price_second_order(e_fig2, MOTMSchedule(theta, beta), t).log_price
    expected = (second + (1.5 - 2 * beta) * math.log(t) - 2 * math.log(theta)
                + math.log(fig2.v0**1.5 / math.sqrt(2 * math.pi)))
    assert log_price_refined(e_fig2, MOTMSchedule(theta, beta), t).log_price == pytest.approx(expected, rel=1e-12)


def test_implied_vol_examples(e_fig2):
    assert implied_vol_expansion(e_fig2, MOTMSchedule(0.4, 0.3), 0.1) == pytest.approx(0.21229, abs=1e-4)
    flat = EnergyData(1 / 0.0654, 0.0)
    for t in (1e-6, 0.1, 2.0):
        assert implied_vol_expansion(flat, MOTMSchedule(0.4, 0.3), t) == pytest.approx(math.sqrt(0.0654), rel=1e-15)


def test_implied_vol_matches_heston_display(fig2, e_fig2):
    # sigma0 + eta rho k / (4 sigma0)
    s = MOTMSchedule(0.4, 0.3)
    sigma0 = math.sqrt(fig2.v0)
    expected = sigma0 + fig2.eta * fig2.rho * s.k(0.1) / (4 * sigma0)
    assert implied_vol_expansion(e_fig2, s, 0.1) == pytest.approx(expected, rel=1e-12)


def test_skew_limit_from_exact_prices(fig2, e_fig2):
    t = 0.005
    s = MOTMSchedule(0.4, 0.3)
    k = s.k(t)
    q = OptionQuery.from_log_moneyness(k, t)
    iv = bs_implied_vol(q, log_price=heston_call(fig2, q).meta["log_price"])
    slope = (iv - e_fig2.sigma0) / k
    assert slope == pytest.approx(-0.2167, rel=0.10)


@given(st.floats(0.05, 1.0), st.floats(0.05, 0.33), st.floats(0.05, 0.33), st.floats(1e-6, 0.1))
def test_implied_vol_is_function_of_k(theta1, beta1, beta2, t1):
    e = EnergyData(15.29052, 77.743)
    s1 = MOTMSchedule(theta1, beta1)
    k = s1.k(t1)
    # pick t2 so the second schedule hits the same strike
    theta2 = 0.5
    t2 = (k / theta2) ** (1 / beta2)
    if t2 > 0:
        s2 = MOTMSchedule(theta2, beta2)
        assert implied_vol_expansion(e, s2, t2) == pytest.approx(implied_vol_expansion(e, s1, t1), rel=1e-12)


@given(st.floats(0.05, 2.0), st.sampled_from([0.21, 0.25, 0.3, 0.4, 0.49]), st.floats(1e-9, 1.0))
def test_assembly_is_exact(theta, beta, t):
    e = EnergyData(15.29052, 77.743, 527.98, gamma0=1.5599877630856573)
    r = log_price_refined(e, MOTMSchedule(theta, beta), t)
    total = 0.0
    for part in r.signed_parts():
        total += part
    assert total == r.log_price
    assert r.rate_term > 0


# near beta = 1/2 the ratio t^(2 beta - 1) / log(1/t) dips before it grows,
# so the four decades start past its minimum
@pytest.mark.parametrize("beta,t0", [(0.05, 1e-2), (0.2, 1e-2), (0.3, 1e-2), (0.45, 1e-6)])
def test_rate_dominates_log_term(beta, t0):
    e = EnergyData(15.29052, 77.743, 527.98, gamma0=1.56)
    s = MOTMSchedule(0.4, beta)
    ratios = []
    for t in (t0 * 10.0**-j for j in range(5)):
        rate = log_price_first_order(e, s, t).rate_term
        log_term = (2 * beta - 1.5) * math.log(1 / t) - 2 * math.log(s.ell(t))
        ratios.append(rate / abs(log_term))
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 1.3 * ratios[0]


@pytest.mark.parametrize("beta", [0.21, 0.25, 0.3])
def test_consistency_ladder(e_fig2, beta):
    s = MOTMSchedule(0.4, beta)
    scaled = []
    for t in (1e-2, 1e-4, 1e-6, 1e-8):
        k = s.k(t)
        gap = log_price_refined(e_fig2, s, t).log_price - log_price_second_order(e_fig2, s, t).log_price
        scaled.append(abs(gap) / (k**3 / t))
    # bounded, in fact shrinking, as t decreases
    assert max(scaled) < 1.5 * scaled[0] + 1e-12
    assert scaled[-1] < scaled[0]


def test_nonpositive_time_rejected(e_fig2):
    s = MOTMSchedule(0.4, 0.3)
    for fn in (log_price_first_order, log_price_second_order, log_price_refined, implied_vol_expansion):
        with pytest.raises(DomainError):
            fn(e_fig2, s, 0.0)
