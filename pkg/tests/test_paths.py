import math

import numpy as np
import pytest

from subergo.paths import (
    Ball,
    ConstantSegment,
    DecaySegment,
    GridSegment,
    HittingQuery,
    Interval,
    Path,
    Singleton,
    ensemble_snapshot,
    hitting_time,
    map_trajectories,
    mean_ci,
    path_integral,
    thread_count,
)
from subergo.rates import polynomial_rate


def step_path():
    return Path([ConstantSegment(0.0, 1.0, 2), ConstantSegment(1.0, 3.0, 0), ConstantSegment(3.0, 4.0, 5)])


def test_path_validation():
    with pytest.raises(ValueError):
        Path([])
    with pytest.raises(ValueError):
        Path([ConstantSegment(0.5, 1.0, 0)])
    with pytest.raises(ValueError):
        Path([ConstantSegment(0.0, 1.0, 0), ConstantSegment(1.5, 2.0, 1)])


def test_right_continuity():
    p = step_path()
    assert p(0.999) == 2 and p(1.0) == 0 and p(3.0) == 5
    with pytest.raises(ValueError):
        p(4.5)


def test_delayed_hitting():
    p = step_path()
    C = Singleton(0)
    assert hitting_time(p, HittingQuery(C, 0.0)) == 1.0
    assert hitting_time(p, HittingQuery(C, 2.0)) == 2.0
    assert math.isinf(hitting_time(p, HittingQuery(C, 3.5)))
    # delay exactly at the end of the horizon still counts the closed end
    assert hitting_time(p, HittingQuery(Singleton(5), 4.0)) == 4.0


def test_decay_crossing_closed_form():
    seg = DecaySegment(0.0, 10.0, 8.0, 0.5)
    p = Path([seg])
    t = hitting_time(p, HittingQuery(Interval(0.0, 2.0)))
    assert t == pytest.approx(math.log(4.0) / 0.5, rel=1e-14)


def test_grid_crossing_bisects():
    times = np.linspace(0, 1, 11)
    seg = GridSegment(0.0, 1.0, times, 3.0 - 3.0 * times)
    t = hitting_time(Path([seg]), HittingQuery(Interval(-1.0, 1.0)))
    assert t == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_ball_in_two_dimensions():
    times = np.linspace(0, 1, 3)
    pts = np.array([[2.0, 0.0], [1.5, 0.0], [0.5, 0.0]])
    seg = GridSegment(0.0, 1.0, times, pts)
    t = hitting_time(Path([seg], dimension=2), HittingQuery(Ball(1.0)))
    assert t == pytest.approx(0.75, abs=1e-12)


def test_path_integral_piecewise_constant_with_rate():
    p = step_path()
    r = polynomial_rate(1.0)
    # int_0^1 (1+s) 2 ds + int_3^4 (1+s) 5 ds
    expect = 2 * 1.5 + 5 * 4.5
    assert path_integral(p, lambda x: np.asarray(x, dtype=float), r) == pytest.approx(expect, rel=1e-12)
    assert path_integral(p, lambda x: np.asarray(x, dtype=float), r, upto=1.0) == pytest.approx(3.0)


def test_path_integral_decay():
    p = Path([DecaySegment(0.0, 2.0, 1.0, 1.0)])
    got = path_integral(p, lambda x: np.asarray(x, dtype=float))
    assert got == pytest.approx(1 - math.exp(-2.0), rel=1e-10)


def test_mean_ci():
    m, hw = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and hw == pytest.approx(1.959963984540054 / math.sqrt(3))


def test_threading_keeps_order(monkeypatch):
    monkeypatch.setenv("SUBERGO_THREADS", "3")
    assert thread_count() == 3
    out = map_trajectories(lambda idx: idx * 2.0, 10000, chunk=700)
    assert np.array_equal(out, np.arange(10000) * 2.0)
    monkeypatch.setenv("SUBERGO_THREADS", "bogus")
    assert thread_count() == 1


def test_snapshot_thread_invariant(monkeypatch):
    from subergo.jump import JumpModel, JumpRates, JumpWeights

    m = JumpModel(JumpWeights("geometric", q=0.5), JumpRates("power", a=1.0))
    monkeypatch.setenv("SUBERGO_THREADS", "1")
    a = ensemble_snapshot(m, 0, [1.0, 5.0], 300, seed=4).samples
    monkeypatch.setenv("SUBERGO_THREADS", "4")
    b = ensemble_snapshot(m, 0, [1.0, 5.0], 300, seed=4).samples
    assert np.array_equal(a, b)
