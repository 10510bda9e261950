import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import levy_log_mgf
from motm.bs import bs_log_call, bs_log_digital
from motm.errors import DomainError, RegimeError
from motm.expansions import MOTMSchedule, log_price_first_order
from motm.energy import EnergyData
from motm.heston import heston_critical_moment, heston_explosion_time, heston_log_mgf_real
from motm.moderate import (
    MDRate,
    digital_md_estimate,
    md_rate,
    rescaled_cgf,
    rescaled_cgf_probe,
    transfer_check,
)


def heston_mgf(p):
    return lambda s, t: heston_log_mgf_real(p, s, t)


def test_rescaled_cgf_at_zero(fig2):
    for t in (1.0, 1e-3, 1e-8):
        assert rescaled_cgf(heston_mgf(fig2), 0.0, 0.3, t) == 0.0
        assert rescaled_cgf(levy_log_mgf, 0.0, 0.3, t) == 0.0


def test_rescaled_cgf_heston_limit(fig2):
    value = rescaled_cgf(heston_mgf(fig2), 1.0, 0.25, 1e-5)
    assert value == pytest.approx(0.5 * fig2.v0, rel=0.05)


def test_rescaled_cgf_probe_converges(fig2):
    probe = rescaled_cgf_probe(heston_mgf(fig2), 1.0, 0.25, [1e-2, 1e-4, 1e-6, 1e-8])
    gaps = [abs(v - 0.5 * fig2.v0) for v in probe.values]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    with pytest.raises(DomainError):
        rescaled_cgf_probe(heston_mgf(fig2), 1.0, 0.25, [1e-4, 1e-2])


def test_even_part_of_rescaled_cgf(fig2):
    for p in (0.5, 1.0, 2.0):
        total = rescaled_cgf(heston_mgf(fig2), p, 0.25, 1e-5) + rescaled_cgf(heston_mgf(fig2), -p, 0.25, 1e-5)
        assert total == pytest.approx(fig2.v0 * p * p, rel=0.05)


def test_finite_critical_moment_double_explodes():
    # p+ = 10 for every t, so t^(beta - 1) p passes it as t -> 0
    for p in (0.5, 1.0, 3.0):
        assert rescaled_cgf(levy_log_mgf, p, 0.3, 1e-5) == math.inf
    assert math.isfinite(rescaled_cgf(levy_log_mgf, 1.0, 0.3, 0.5))


def test_finiteness_criterion(fig2):
    beta = 0.3
    # Heston: t^(1-beta) p+(t) grows, so every fixed p is eventually admissible
    ts = [1e-2, 1e-4, 1e-6, 1e-8]
    scaled = [t ** (1 - beta) * heston_critical_moment(fig2, t) for t in ts]
    assert all(b > a for a, b in zip(scaled, scaled[1:]))
    for p in (5.0, 20.0, -20.0):
        assert math.isfinite(rescaled_cgf(heston_mgf(fig2), p, beta, 1e-8))
    # the double: t^(1-beta) p+ -> 0 and the rescaled cgf is eventually infinite
    assert [t ** (1 - beta) * 10.0 for t in ts] == sorted((t ** (1 - beta) * 10.0 for t in ts), reverse=True)
    assert rescaled_cgf(levy_log_mgf, 0.1, beta, 1e-8) == math.inf


def test_rescaled_cgf_finite_iff_below_critical_moment(fig2):
    beta, t = 0.3, 1e-3
    p_plus = heston_critical_moment(fig2, t)
    edge = p_plus * t ** (1 - beta)
    assert math.isfinite(rescaled_cgf(heston_mgf(fig2), 0.99 * edge, beta, t))
    assert rescaled_cgf(heston_mgf(fig2), 1.01 * edge, beta, t) == math.inf


def test_md_rate_examples():
    r = MDRate(0.0654)
    assert md_rate(r, 0.0) == 0.0
    assert md_rate(r, 1.0) == pytest.approx(7.64526, abs=1e-5)
    p = np.linspace(-100.0, 100.0, 2_000_001)
    for x in (0.3, 1.0, -2.0):
        grid_sup = np.max(p * x - 0.5 * 0.0654 * p * p)
        assert grid_sup == pytest.approx(md_rate(r, x), abs=1e-8)
    with pytest.raises(DomainError):
        MDRate(0.0)


def test_digital_estimate_examples(fig2):
    r = MDRate(fig2.v0)
    s = MOTMSchedule(0.4, 0.3)
    assert digital_md_estimate(r, s, 0.1) == pytest.approx(-3.0726, abs=1e-3)
    assert digital_md_estimate(r, MOTMSchedule(1e-12, 0.3), 0.1) == pytest.approx(0.0, abs=1e-20)
    e = EnergyData(1 / fig2.v0, 0.0)
    for t in (0.1, 1e-3, 1e-6):
        assert digital_md_estimate(r, s, t) == pytest.approx(log_price_first_order(e, s, t).log_price, rel=1e-14)


@given(st.floats(1e-3, 5.0), st.floats(0.01, 0.49), st.floats(1e-8, 1.0))
def test_digital_estimate_nonpositive(theta, beta, t):
    assert digital_md_estimate(MDRate(0.04), MOTMSchedule(theta, beta), t) < 0


def test_transfer_black_scholes():
    sigma = 0.2
    s = MOTMSchedule(0.4, 0.3)
    table = transfer_check(lambda k, t: bs_log_call(k, sigma * math.sqrt(t)),
                           lambda k, t: bs_log_digital(k, sigma * math.sqrt(t)),
                           s, [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], v0=sigma**2)
    diffs = [abs(row.difference) for row in table.rows]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert table.converging
    assert table.md_limit == pytest.approx(-12.5)
    assert table.rows[-1].scaled_log_digital == pytest.approx(-12.5, rel=0.05)


def test_transfer_heston(fig2_spec, fig2):
    s = MOTMSchedule(0.4, 0.3)
    table = transfer_check(fig2_spec.log_call, fig2_spec.log_digital, s, [1e-1, 1e-2, 1e-3],
                           v0=fig2.v0, explosion_time=fig2_spec.explosion_time)
    diffs = [abs(row.difference) for row in table.rows]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert table.converging
    assert table.md_limit == pytest.approx(-7.645, abs=1e-3)


def test_transfer_requires_moment_condition():
    with pytest.raises(DomainError):
        transfer_check(lambda k, t: -1.0, lambda k, t: -1.0, MOTMSchedule(0.4, 0.3), [0.1],
                       v0=0.04, explosion_time=lambda p: 0.0)


def test_out_of_regime_schedule_rejected():
    for beta in (0.5, 0.6):
        with pytest.raises(RegimeError):
            MOTMSchedule(0.4, beta)


def test_explosion_time_positive_for_heston(fig2):
    assert heston_explosion_time(fig2, 2.0) > 0
