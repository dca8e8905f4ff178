import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etrc.errors import ValidationError
from etrc.triggering import (
    TriggerRule,
    TriggerState,
    dynamic_fires,
    dynamic_step,
    eta_rk4,
    periodic_should_fire,
    static_should_fire,
)


def test_fresh_sample_never_fires():
    assert not static_should_fire(np.array([1.0, 0.0]), np.zeros(2), 0.1)


def test_boundary_fires():
    x = np.array([3.0, 4.0])
    e = np.array([0.5, 0.0])
    assert static_should_fire(x, e, 0.1)


def test_origin_is_suppressed():
    # Both norms below 1e-9: no event, to avoid chatter at the equilibrium.
    assert not static_should_fire(np.zeros(2), np.zeros(2), 0.1)
    assert not dynamic_fires(0.0, 0.0, 0.0, 0.1, 1.0)


def test_large_eta_blocks_dynamic_event():
    rule = TriggerRule("dynamic", mu=0.1, theta=1.0, lam=0.5, eta0=10.0)
    fire, eta = dynamic_step(TriggerState(np.ones(2), eta=10.0), np.ones(2), np.zeros(2), rule, 1e-3)
    assert not fire and eta > 9.9


def test_eta_rk4_matches_exact_solution_for_constant_drive():
    eta, lam, d, dt = 0.3, 0.7, 0.2, 0.05
    exact = d / lam + (eta - d / lam) * math.exp(-lam * dt)
    assert eta_rk4(eta, (d,) * 4, lam, dt) == pytest.approx(exact, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), st.floats(0.01, 2))
def test_infinite_theta_recovers_static_rule(nx, ne, mu):
    x = np.array([nx, 0.0])
    e = np.array([0.0, ne])
    assert dynamic_fires(123.0, nx, ne, mu, math.inf) == static_should_fire(x, e, mu)


def test_decision_streams_agree_as_theta_grows():
    rng = np.random.default_rng(3)
    xs = rng.normal(size=(500, 2))
    es = rng.normal(size=(500, 2)) * 0.05
    mu = 0.04
    static = [static_should_fire(x, e, mu) for x, e in zip(xs, es)]
    dyn = [dynamic_fires(0.0, np.linalg.norm(x), np.linalg.norm(e), mu, 1e12)
           for x, e in zip(xs, es)]
    assert static == dyn


def test_periodic_rule():
    assert periodic_should_fire(0.002, 0.001, 0.001)
    assert not periodic_should_fire(0.0015, 0.001, 0.001)
    with pytest.raises(ValidationError):
        periodic_should_fire(1.0, 0.0, 0.0)


def test_rule_validation():
    with pytest.raises(ValidationError):
        TriggerRule("static", mu=0.0)
    with pytest.raises(ValidationError):
        TriggerRule("dynamic", mu=0.1, theta=0.0)
    with pytest.raises(ValidationError):
        TriggerRule("periodic")
    with pytest.raises(ValidationError):
        TriggerRule("sometimes", mu=1.0)


def test_lambda_from_k_and_theta_warning():
    rule = TriggerRule.dynamic_from_k(0.1, 0.98, 0.1, 0.6, 0.01)
    assert rule.lam == pytest.approx(0.012)
    with pytest.warns(RuntimeWarning):
        assert not rule.check_theta(20.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert rule.check_theta(5.0)


def test_dynamic_step_rejects_bad_dt():
    rule = TriggerRule("dynamic", mu=0.1)
    with pytest.raises(ValidationError):
        dynamic_step(TriggerState(np.ones(2)), np.ones(2), np.zeros(2), rule, 0.0)
