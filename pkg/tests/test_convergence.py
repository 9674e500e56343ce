import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subergo.convergence import (
    DistanceSeries,
    ExponentFit,
    compare_to_prediction,
    default_window,
    fit_exponent,
    fnorm_distance,
    mc_fnorm_gap,
)


def pure(slope, c=3.0):
    t = np.geomspace(1, 1000, 40)
    return DistanceSeries(t, c * t**slope, "exact-truncation")


@settings(max_examples=40, deadline=None)
@given(st.floats(-4.0, -0.1), st.floats(1e-3, 1e3))
def test_fit_exact_on_power_laws(slope, c):
    fit = fit_exponent(pure(slope, c))
    assert abs(fit.slope - slope) < 1e-9


def test_fit_needs_points():
    s = DistanceSeries(np.arange(1.0, 5.0), np.ones(4), "exact-truncation")
    with pytest.raises(ValueError):
        fit_exponent(s, window=(1, 4))


def test_window_drops_burn_in_and_floor():
    t = np.linspace(1, 101, 101)
    s = DistanceSeries(t, 1 / t, "exact-truncation", floor=np.full(t.size, 1e-4))
    lo, hi = default_window(s)
    assert lo == pytest.approx(21.0)
    assert hi == pytest.approx(99.0)  # 1/t > 100 x floor stops below t = 100


def test_series_validation():
    with pytest.raises(ValueError):
        DistanceSeries([1, 2], [1, 1], "mc-fnorm")
    with pytest.raises(ValueError):
        DistanceSeries([2, 1], [1, 1], "exact-truncation")
    with pytest.raises(ValueError):
        DistanceSeries([1, 2], [-1, 1], "exact-truncation")


def test_csv_schema():
    s = DistanceSeries([1.0, 2.0], [0.5, 0.25], "mc-fnorm", ci=[0.1, 0.1])
    assert s.to_csv().splitlines()[0] == "t,value,ci,method"


@pytest.mark.parametrize(
    "slope,se,verdict",
    [(-2.0, 0.01, "no-slower"), (-0.5, 0.01, "contradiction"), (-0.95, 0.1, "inconclusive")],
)
def test_compare(slope, se, verdict):
    fit = ExponentFit(slope, 0.0, (1, 10), 0.0, se, 10)
    assert compare_to_prediction(fit, 1.0, 0.0) == verdict


def test_fnorm_distance():
    assert fnorm_distance([0.5, 0.5], [1.0, 0.0]) == 1.0
    assert fnorm_distance([0.5, 0.5], [1.0, 0.0], f=[1.0, 3.0]) == 2.0
    with pytest.raises(ValueError):
        fnorm_distance([1.0], [0.5, 0.5])


def test_mc_gap_lower_bound():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(20000)
    g = mc_fnorm_gap(x, [0.0, np.tanh(0.0)], [np.tanh, lambda y: np.exp(-y * y)])
    # E exp(-Z^2) = 1/sqrt(3)
    assert g["argmax"] == 1
    assert abs(g["estimate"] - 1 / np.sqrt(3)) < 4 * g["half_width"]
    with pytest.raises(ValueError):
        mc_fnorm_gap(x, [0.0], [lambda y: 2 * y])
