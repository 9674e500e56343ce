import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subergo.cpou import CPOUModel, GeneratorUndefined, JumpLaw, heavy_tail_classify, log_lyapunov, tail_moment
from subergo.functions import TestFunction
from subergo.paths import HittingQuery, Interval, hitting_time


def identity():
    return TestFunction(lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float)), None, 1.0)


def test_point_mass_generator_exact():
    m = CPOUModel(1.0, 2.0, JumpLaw("point-mass", u0=1.0))
    # 2 * 1 - 1 * 3 * 1
    assert m.generator_apply(identity(), 3.0) == -1.0


@pytest.mark.parametrize("law", [JumpLaw("pareto-log", k=3.5), JumpLaw("log-weibull", beta=0.5)])
def test_law_tail_and_density_agree(law):
    s = np.linspace(1.5, 30, 40)
    h = 1e-6
    # log_tail / log_density describe T = log W
    dens = law.log_density(s)
    fd = np.array([-(law.log_tail(x + h) - law.log_tail(x - h)) / (2 * h) for x in s])
    assert np.allclose(dens, fd, rtol=1e-5)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-9, 1 - 1e-9))
def test_sample_log_inverts_tail(u):
    law = JumpLaw("pareto-log", k=3.0)
    s = law.sample_log(u)
    assert law.log_tail(s) == pytest.approx(1 - u, rel=1e-8)


def test_classifier_verdicts():
    v = lambda F: heavy_tail_classify(F)["verdict"]
    assert v(JumpLaw("pareto-log", k=1.5)) == "not-positive-recurrent"
    c3 = heavy_tail_classify(JumpLaw("pareto-log", k=3.0))
    assert c3["verdict"] == "not-geometric" and math.isfinite(c3["mean_log_jump"])
    assert v(JumpLaw("point-mass", u0=1.0)) == "no-obstruction"
    assert v(JumpLaw("log-weibull", beta=0.5)) == "not-geometric"
    assert v(JumpLaw("log-weibull", beta=2.0)) == "no-obstruction"


def test_tail_moment():
    assert tail_moment(JumpLaw("point-mass", u0=1.0), 2.0)["value"] == pytest.approx(math.log(2) ** 2)
    assert not tail_moment(JumpLaw("pareto-log", k=2.0), 1.5)["finite"]
    m = tail_moment(JumpLaw("pareto-log", k=4.0), 2.0)
    assert m["finite"] and 3.0 < m["value"] < 4.5


def test_generator_refuses_divergent_jump_integral():
    m = CPOUModel(1.0, 1.0, JumpLaw("pareto-log", k=2.0))
    with pytest.raises(GeneratorUndefined):
        m.generator_apply(log_lyapunov(2.0), 10.0)


def test_certificate_and_refusal():
    m = CPOUModel(1.0, 1.0, JumpLaw("pareto-log", k=4.0))
    cert = m.lemma18_certificate(2.0)
    assert cert.verdict == "certified" and np.all(cert.c_eta > 0)
    assert cert.extra["predicted_rate_exponent"] == 1.0
    assert CPOUModel(1.0, 1.0, JumpLaw("pareto-log", k=2.0)).lemma18_certificate(1.5).verdict == "refused"


def test_survival_bound_formula():
    m = CPOUModel(1.0, 1.0, JumpLaw("pareto-log", k=3.0))
    # (1 - 2^-1) * (mu t)^-2 at t = 2
    assert m.survival_lower_bound(2.0) == pytest.approx(0.125)


def test_simulate_decay_between_jumps():
    m = CPOUModel(2.0, 0.0, JumpLaw("point-mass", u0=1.0))
    p = m.simulate(5.0, 3.0, seed=0)
    assert p(1.5) == pytest.approx(5.0 * math.exp(-3.0))


def test_hitting_time_of_decay_is_exact():
    m = CPOUModel(1.0, 0.0, JumpLaw("point-mass", u0=1.0))
    q = HittingQuery(Interval(0.0, 1.0))
    p = m.simulate(4.0, 10.0, seed=0, stop=q)
    assert hitting_time(p, q) == pytest.approx(math.log(4.0), rel=1e-12)


def test_huge_jumps_overflow_to_inf():
    law = JumpLaw("pareto-log", k=1.2)
    assert law.sample(1 - 1e-15) == math.inf
