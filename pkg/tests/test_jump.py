import math

import numpy as np
import pytest
from scipy import linalg

from subergo.drift import verify_nested
from subergo.jump import JumpModel, JumpRates, JumpWeights, NotPositiveRecurrent, Undecidable
from subergo.paths import HittingQuery, Singleton, estimate_modulated_moment, hitting_time
from subergo.rates import polynomial_rate


def two_state():
    return JumpModel(JumpWeights("table", table=(1.0,)), JumpRates("table", table=(1.0,)), 1.0)


def poly_model():
    return JumpModel(JumpWeights("power", s=4.0), JumpRates("power", a=1.0))


def geometric_weights_model():
    return JumpModel(JumpWeights("geometric", q=0.5), JumpRates("power", a=1.0))


def test_weights_pmf_and_quantile():
    w = JumpWeights("power", s=4.0)
    i = np.arange(1, 200000)
    assert w.pmf(i).sum() == pytest.approx(1.0, abs=1e-12)
    u = np.linspace(0.001, 0.999, 50)
    q = np.array([w.quantile(x) for x in u])
    cdf = np.cumsum(w.pmf(np.arange(1, q.max() + 1)))
    for x, k in zip(u, q):
        assert cdf[k - 1] >= x and (k == 1 or cdf[k - 2] < x)


def test_geometric_quantile_closed_form():
    w = JumpWeights("geometric", q=0.5)
    assert w.quantile(0.5) == 1
    assert w.quantile(0.75) == 2
    assert w.quantile(0.7500001) == 3


def test_invalid_families():
    with pytest.raises(ValueError):
        JumpWeights("power", s=1.0)
    with pytest.raises(ValueError):
        JumpRates("geometric", rho=1.5)
    with pytest.raises(ValueError):
        JumpWeights("table", table=(0.5, 0.4))


def test_two_state_generator_and_distance():
    m = two_state()
    A = m.generator_matrix(1).toarray()
    assert np.allclose(A, [[-1, 1], [1, -1]])
    for t in (0.5, 1.0, 2.0, 5.0):
        d, err = m.transient_distance(1, 0, t)
        assert abs(d - math.exp(-2 * t)) < 1e-12


def test_invariant_matches_null_space():
    m = geometric_weights_model()
    N = 60
    pi, leak = m.invariant_distribution(N)
    A = m.generator_matrix(N).toarray()
    ns = linalg.null_space(A.T)[:, 0]
    ns = ns / ns.sum()
    assert np.max(np.abs(pi[: N + 1] / pi[: N + 1].sum() - ns)) < 1e-10
    assert pi[0] == pytest.approx(1 / 3, abs=1e-12)


def test_invariant_with_lambda0():
    m = JumpModel(JumpWeights("geometric", q=0.5), JumpRates("constant", scale=2.0), lambda0=3.0)
    pi, _ = m.invariant_distribution(200)
    # pi(0) = 1 / (1 + lambda0 sum p_i / lambda_i)
    assert pi[0] == pytest.approx(1.0 / (1.0 + 1.5), abs=1e-12)


def test_not_positive_recurrent():
    m = JumpModel(JumpWeights("power", s=2.0), JumpRates("power", a=1.0))
    with pytest.raises(NotPositiveRecurrent):
        m.invariant_distribution(100)


def test_leak_and_truncation():
    m = poly_model()
    N = m.truncation_level(1e-10)
    assert m.leak(N) <= 1e-10 < m.leak(N - 1)


def test_transient_rows_are_subprobabilities():
    m = poly_model()
    res = m.transient(500, 0, [1.0, 10.0, 50.0])
    assert np.all(res.rows >= -1e-15)
    assert np.all(res.mass <= 1 + 1e-12)
    assert np.all(np.diff(res.distance) < 0)


def test_series_rules():
    m = poly_model()
    assert m.series_converges("poly", 2.0)
    assert not m.series_converges("poly", 3.0)
    assert math.isinf(m.inverse_rate_moment(3.0))
    # sum i^-4 i^2 / zeta(4) = zeta(2) / zeta(4)
    assert m.inverse_rate_moment(2.0) == pytest.approx((math.pi**2 / 6) / (math.pi**4 / 90), rel=1e-12)
    g = JumpModel(JumpWeights("geometric", q=0.5), JumpRates("geometric", rho=0.6))
    assert g.series_converges("log", 2.0) and not g.series_converges("poly", 2.0)


def test_table_rates_undecidable():
    m = JumpModel(JumpWeights("power", s=3.0), JumpRates("table", table=(1.0, 0.5)))
    with pytest.raises(Undecidable):
        m.series_converges("poly", 1.0)


def test_apply_generator_on_v():
    m = geometric_weights_model()
    V = m.drift_function(2.0)
    i = np.arange(1, 6)
    out = m.apply_generator(V, i)
    lam = 1.0 / i
    assert np.allclose(out, lam * (V(np.zeros(1))[0] - V(i)))


def test_drift_certificate_polynomial_weights():
    cert = poly_model().drift_certificate(2.0)
    assert cert.verdict == "certified"
    assert cert.label == "grid+tail-lemma"
    assert cert.eta_grid.size == 9
    assert np.all(cert.c_eta > 0)
    assert cert.extra["C_grid_points"] == 1


def test_drift_certificate_refused_when_moment_diverges():
    assert poly_model().drift_certificate(3.0).verdict == "refused"
    with pytest.raises(ValueError):
        poly_model().drift_certificate(0.5)


def test_conductance_obstruction():
    obs = poly_model().conductance_obstruction(1.0, 1000)
    assert obs["infimum"] < 0.002
    assert obs["verdict"] == "geometric ergodicity obstructed"
    bounded = JumpModel(JumpWeights("power", s=4.0), JumpRates("constant"))
    assert bounded.conductance_obstruction(1.0, 1000)["verdict"] == "no obstruction found"


def test_predicted_rates():
    m = poly_model()
    menu = m.predicted_rates("poly", 2.0)
    assert max(e.rate_exponent for e in menu) == pytest.approx(1.0)
    assert not len(m.predicted_rates("poly", 3.0))


def test_simulate_two_state_alternates():
    path = two_state().simulate(0, 20.0, seed=5)
    states = [s.state for s in path.segments]
    assert states == [k % 2 for k in range(len(states))]


def test_simulation_prefix_independent_of_horizon():
    m = poly_model()
    a = m.simulate(0, 10.0, seed=3, trajectory=2)
    b = m.simulate(0, 100.0, seed=3, trajectory=2)
    assert [s.state for s in a.segments] == [s.state for s in b.segments[: len(a.segments)]]


def test_hitting_moment_matches_exact():
    # from state 3 the holding time is Exp(1/3): E tau_0 = 3 and E int_0^tau (1 + s) ds = 3 + 9 = 12
    m = geometric_weights_model()
    q = HittingQuery(Singleton(0))
    est = estimate_modulated_moment(m, 3, lambda x: np.ones_like(np.asarray(x, dtype=float)), None, q, 4000, horizon=1e4, seed=2)
    assert abs(est.mean - 3.0) < 4 * est.half_width
    est2 = estimate_modulated_moment(
        m, 3, lambda x: np.ones_like(np.asarray(x, dtype=float)), polynomial_rate(1.0), q, 4000, horizon=1e4, seed=2
    )
    assert abs(est2.mean - 12.0) < 4 * est2.half_width


def test_nested_ladder_certifies():
    m = poly_model()
    cert = verify_nested(m, m.nested_ladder(2.0, 2, N=300))
    assert cert.verdict == "certified"
    assert all(cert.rung_verdicts)


def test_stop_truncates_path():
    m = geometric_weights_model()
    q = HittingQuery(Singleton(0), delay=0.0)
    path = m.simulate(4, 1e4, seed=1, stop=q)
    assert path.horizon == hitting_time(path, q)
