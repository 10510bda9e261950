import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from motm.bs import BSParams, bs_energy
from motm.errors import ConvergenceError
from motm.oracles import fd_derivatives


def test_quartic_at_zero():
    d = fd_derivatives(lambda x: x**4, 0.0)
    assert d.as_list() == pytest.approx([0.0, 0.0, 0.0, 24.0], abs=1e-6)


def test_bs_energy_closed_form_derivatives():
    d = fd_derivatives(lambda k: bs_energy(k, BSParams(0.2)), 0.3, step=0.05)
    exact = [0.3 / 0.04, 1 / 0.04, 0.0, 0.0]
    for order, value in zip((1, 2, 3, 4), exact):
        assert abs(d[order] - value) <= max(d.errors[order], 1e-9)
    assert d[1] == pytest.approx(exact[0], rel=1e-12)
    assert d[2] == pytest.approx(exact[1], rel=1e-12)


def test_non_finite_values_raise():
    with pytest.raises(ConvergenceError):
        fd_derivatives(lambda x: math.nan if x > 0 else 0.0, 0.0, orders=(1,))


def test_order_validation():
    with pytest.raises(ValueError):
        fd_derivatives(math.sin, 0.0, orders=(5,))


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=7), st.floats(-1, 1))
def test_error_estimates_bound_true_error_on_polynomials(coeffs, x0):
    # derivatives of the polynomial sum c_j x^j are exact apart from rounding
    def f(x):
        return sum(c * x**j for j, c in enumerate(coeffs))

    def exact(order):
        return sum(c * math.perm(j, order) * x0 ** (j - order) for j, c in enumerate(coeffs) if j >= order)

    d = fd_derivatives(f, x0, levels=4)
    for order in (1, 2, 3, 4):
        true_err = abs(d[order] - exact(order))
        rounding = 1e-6 * (1 + sum(abs(c) for c in coeffs))
        assert true_err <= d.errors[order] + 1e-12
