import math

import numpy as np
import pytest

from subergo.langevin import (
    LangevinModel,
    NotRegular,
    TargetDensity,
    drift_inequality_scan,
    general_diffusion_tau,
    quadrature_mean,
    regularity_check,
    smoothstep,
    tempered_lyapunov,
    theorem16_classify,
)
from subergo.paths import Ball, HittingQuery, hitting_time


@pytest.fixture(scope="module")
def target():
    return TargetDensity.polynomial_tail(0.25, 1)


def test_target_checks():
    with pytest.raises(ValueError):
        TargetDensity.polynomial_tail(0.6, 2)
    t = TargetDensity.polynomial_tail(0.25, 2)
    assert t.gamma == 0.0


def test_gradient_matches_finite_difference(target):
    x = np.linspace(-30, 30, 61)
    h = 1e-5
    fd = (target.log_density(x + h) - target.log_density(x - h)) / (2 * h)
    assert np.allclose(target.grad_log(x), fd, atol=1e-7)
    fd2 = (target.grad_log(x + h) - target.grad_log(x - h)) / (2 * h)
    assert np.allclose(target.lap_log(x), fd2, atol=1e-6)


def test_drift_and_generator_at_zero_temperature(target):
    m = LangevinModel(target, 0.0)
    # b(1) = 1/2 * grad log pi(1) = 1/2 * (-4/2) = -1
    assert m.drift(np.array([1.0]))[0] == pytest.approx(-1.0)
    from subergo.functions import TestFunction

    V = TestFunction(lambda x: x**2, lambda x: 2 * x, lambda x: 2 * np.ones_like(x))
    # L x^2 = 2 x b(x) + 1 at x = 1
    assert m.elliptic_apply(V, np.array([1.0]))[0] == pytest.approx(-1.0)


def test_smoothstep_is_c2():
    u = np.array([0.0, 1.0])
    s, ds, d2s = smoothstep(u)
    assert s.tolist() == [0.0, 1.0]
    assert np.allclose(ds, 0) and np.allclose(d2s, 0)
    v, dv, d2v = smoothstep(np.array([0.5]))
    assert v[0] == pytest.approx(0.5)


def test_lyapunov_derivatives(target):
    V = tempered_lyapunov(target, 0.5)
    x = np.linspace(0.3, 40, 200)
    h = 1e-5
    assert np.allclose(V.grad(x), (V(x + h) - V(x - h)) / (2 * h), rtol=1e-5, atol=1e-6)
    assert np.allclose(V.laplacian(x), (V.grad(x + h) - V.grad(x - h)) / (2 * h), rtol=1e-4, atol=1e-5)


@pytest.mark.parametrize("d", [0.0, 0.1])
def test_closed_form_generator(target, d):
    m = LangevinModel(target, d)
    V = tempered_lyapunov(target, 0.5)
    x = np.geomspace(5, 100, 50)
    x = np.concatenate([x, -x])
    num = m.elliptic_apply(V, x)
    closed = m.closed_form_LV(0.5, x)
    assert np.max(np.abs(num - closed) / np.abs(closed)) < 1e-3


def test_regularity(target):
    assert LangevinModel(target, 0.0).regularity["verdict"] == "regular"
    assert LangevinModel(target, 0.625).regularity["verdict"] == "regular"
    bad = LangevinModel(target, 0.7)
    assert bad.regularity["verdict"] == "not regular"
    with pytest.raises(NotRegular):
        bad.sample_at(0.0, [1.0], 0, np.arange(2))
    pi2 = regularity_check(LangevinModel(target, 0.0))["partial_integrals"]
    assert np.all(np.diff(pi2) > 0)


def test_scan_outcomes(target):
    m = LangevinModel(target, 0.0)
    ok = drift_inequality_scan(m, 0.5)
    assert ok.verdict == "holds" and ok.alpha == pytest.approx(1.0) and ok.c > 0
    assert ok.max_rel_gap < 1e-3
    assert drift_inequality_scan(m, 1.3).verdict == "condition violated"
    assert drift_inequality_scan(m, 0.25).verdict == "refused"


def test_classifier():
    r = theorem16_classify(0.25, 0.25, 0.0, 0.0)
    assert r.regime == "cold" and r.tau_sup == 1.5
    g = theorem16_classify(0.25, 0.25, 0.25, 0.5)
    assert g.regime == "geometric" and g.tau_sup is None
    with pytest.raises(ValueError):
        theorem16_classify(0.25, 0.25, 0.0, 1.0)
    with pytest.raises(ValueError):
        theorem16_classify(0.25, 0.25, 0.7, 0.1)


def test_general_tau():
    assert general_diffusion_tau(1.0, 1.0, 1.0, 0.0, 0.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        general_diffusion_tau(1.0, 1.0, 1.0, 2.0, 0.0)


def test_quadrature_mean(target):
    # pi ~ (1+x^2)^-2, pi(1/(1+x^2)) = B(1/2, 5/2) / B(1/2, 3/2) = 3/4
    assert quadrature_mean(target, lambda x: 1 / (1 + x * x)) == pytest.approx(0.75, rel=1e-10)


def test_sample_at_matches_simulate(target):
    m = LangevinModel(target, 0.0, h0=0.05)
    # one observation time, so both use the same step grid and noise counters
    snap = m.sample_at(2.0, [1.0], 4, np.array([0, 1, 2]))
    for j in range(3):
        p = m.simulate(2.0, 1.0, 4, trajectory=j)
        assert p(1.0) == pytest.approx(snap[j, 0], abs=1e-12)


def test_sampling_deterministic(target):
    m = LangevinModel(target, 0.1)
    a = m.sample_at(1.0, [1.0, 2.0], 9, np.arange(50))
    b = m.sample_at(1.0, [1.0, 2.0], 9, np.arange(50))
    assert np.array_equal(a, b)


def test_two_dimensional_hitting():
    t = TargetDensity.polynomial_tail(0.25, 2)
    m = LangevinModel(t, 0.0, h0=0.05)
    q = HittingQuery(Ball(1.0))
    p = m.simulate(np.array([3.0, 0.0]), 500.0, 1, stop=q)
    tau = hitting_time(p, q)
    assert math.isfinite(tau)
    assert np.linalg.norm(p(tau)) <= 1.0 + 1e-9
