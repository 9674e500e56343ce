import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subergo import rates
from subergo.rates import RateFunction, make_young_pair, polynomial_rate, tradeoff_menu

FAMILY_SAMPLES = [
    RateFunction("constant"),
    RateFunction("log-power", beta=0.5),
    RateFunction("log-power", beta=3.0),
    polynomial_rate(1.5),
    polynomial_rate(0.3, -2.0),
    polynomial_rate(2.0, 1.0),
    RateFunction("subexponential", a=2.0, beta=0.5),
]


@pytest.mark.parametrize("r", FAMILY_SAMPLES, ids=lambda r: r.describe())
def test_rate_axioms(r):
    t = np.concatenate([[0.0], np.geomspace(1e-3, 1e6, 400)])
    lv = r.log_value(t)
    assert lv[0] == pytest.approx(0.0)
    assert np.all(np.diff(lv) >= -1e-12)
    lr = r.log_value(t[1:]) / t[1:]
    assert np.all(np.diff(lr) <= 1e-12)


@pytest.mark.parametrize("r", FAMILY_SAMPLES, ids=lambda r: r.describe())
def test_submultiplicative_grid(r):
    s = np.linspace(0, 500, 100)
    S, T = np.meshgrid(s, s)
    assert np.all(r.log_value(S + T) <= r.log_value(S) + r.log_value(T) + 1e-9)


def test_bad_parameters():
    with pytest.raises(ValueError):
        RateFunction("subexponential", a=1.0, beta=1.0)
    with pytest.raises(ValueError):
        RateFunction("polynomial-log", alpha=0.0)
    with pytest.raises(ValueError):
        RateFunction("nope")


def test_cumulative_rate_closed_form():
    r = polynomial_rate(2.0)
    assert rates.cumulative_rate(r, 3.0) == pytest.approx((4.0**3 - 1) / 3.0, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.0, 1.0),
    st.floats(1.0, 1e12),
    st.floats(1.0, 1e12),
)
def test_young_pair_inequality(p, x, y):
    yp = make_young_pair(p)
    assert float(yp.psi1(x)) * float(yp.psi2(y)) <= (x + y) * (1 + 1e-12) + 1e-300


def test_young_pair_bulk():
    rng = np.random.default_rng(0)
    p = rng.uniform(0, 1, 10**5)
    x = 10 ** rng.uniform(0, 8, p.size)
    y = 10 ** rng.uniform(0, 8, p.size)
    lhs = np.array([make_young_pair(pp).psi1(xx) * make_young_pair(pp).psi2(yy) for pp, xx, yy in zip(p[:2000], x, y)])
    assert np.all(lhs <= (x[:2000] + y[:2000]) * (1 + 1e-12))


def test_young_pair_edges():
    assert make_young_pair(1.0).tag == "identity-edge"
    assert make_young_pair(0.0).tag == "one-edge"
    with pytest.raises(ValueError):
        make_young_pair(1.5)


def test_tradeoff_menu_exponents():
    menu = tradeoff_menu(0.5, p_grid=(0.0, 0.5, 1.0))
    pol = [e for e in menu if e.kappa is None]
    assert [e.rate_exponent for e in pol] == [1.0, 0.5, 0.0]
    assert [e.norm_exponent for e in pol] == [0.0, 0.25, 0.5]
    kap = [e for e in menu if e.kappa is not None]
    for e in kap:
        assert e.rate_exponent == pytest.approx(e.kappa - 1.0)
        assert e.norm_exponent == pytest.approx(1.0 - e.kappa * 0.5)


def test_menu_rejects_inadmissible():
    with pytest.raises(ValueError):
        tradeoff_menu(0.5, p_grid=(1.0,), b_grid=(-1.0,))
    with pytest.raises(ValueError):
        tradeoff_menu(1.5)


def test_alpha_one_gives_trivial_menu():
    menu = tradeoff_menu(1.0)
    assert all(e.rate_exponent == 0 for e in menu)
    assert math.isclose(menu.alpha, 1.0)
