import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grenander.densities import Linear, StepJump, TruncExp, Uniform, sample_iid
from grenander.errors import ConfigurationError, DomainError, UnsupportedFunctionError
from grenander.estimator import grenander_fit, make_sample
from grenander.likelihood import (
    Perturbation,
    TestFunction,
    bv_function,
    check_perturbation_valid,
    clt_statistic,
    constant_function,
    dlog_likelihood,
    expectation,
    functional_from_config,
    gaussian_covariance,
    hoelder,
    indicator,
    limit_variance,
    perturbation_bound,
    pi0_projection,
    plugin_mean,
    plugin_minus_empirical,
    score_self,
)
from grenander.quadrature import FINE_SPEC, Evaluable, as_evaluable, integrate

ONE = Evaluable(lambda x: np.where((x >= 0) & (x <= 1), 1.0, 0.0), [0.0, 1.0])
S2 = make_sample([0.5, 0.6])

# (density, function) pairs with a finite ||Df/Dp0||
PAIRS = [
    (StepJump(), indicator(0.5)),
    (Linear(), hoelder("cos2pi")),
    (Linear(), hoelder("identity")),
    (Linear(a=0.75, b=0.25, alpha1=2.0), hoelder("cos2pi", 2.0)),
    (TruncExp(rate=1.0), hoelder("cos2pi")),
    (Linear(), bv_function("p0sq", Linear())),
    (StepJump(breaks=(0.0, 0.2, 0.7, 1.5), heights=(2.0, 0.8, 0.25)), indicator(0.7)),
]
PAIR_IDS = [f"{d.family}-{f.name}" for d, f in PAIRS]


# -- test functions ----------------------------------------------------------

def test_indicator_is_closed_on_the_left_piece():
    f = indicator(0.5)
    assert f(np.array([0.0, 0.5, 0.50001, 2.0])).tolist() == [1.0, 1.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        indicator(0.0)


@pytest.mark.parametrize("name", ["cos2pi", "abspow", "identity"])
def test_hoelder_condition_on_random_pairs(name):
    f = hoelder(name)
    rng = np.random.default_rng(0)
    x, y = rng.uniform(0, 1, (2, 20000))
    # include pairs straddling the cusp of abspow
    x[:100], y[:100] = 0.5 - rng.uniform(0, 1e-3, 100), 0.5 + rng.uniform(0, 1e-3, 100)
    lhs = np.abs(f(x) - f(y))
    rhs = f.holder_norm * np.abs(x - y) ** f.holder_exponent
    assert np.all(lhs <= rhs + 1e-14)
    assert np.max(np.abs(f(np.linspace(0, 1, 10001)))) <= f.sup_norm + 1e-15


def test_df_over_dp0():
    assert indicator(0.5).df_over_dp0(StepJump()) == pytest.approx(1.0)
    assert indicator(0.3).df_over_dp0(StepJump()) is None
    assert indicator(0.3).df_over_dp0(Linear()) is None
    assert hoelder("cos2pi").df_over_dp0(Linear()) == pytest.approx(2 * math.pi)
    assert hoelder("cos2pi").df_over_dp0(StepJump()) is None
    assert hoelder("abspow").df_over_dp0(Linear()) is None
    assert bv_function("p0", StepJump()).df_over_dp0(StepJump()) == 1.0
    assert constant_function(3.0).df_over_dp0(StepJump()) == 0.0


def test_functional_config():
    d = Linear()
    assert functional_from_config({"kind": "indicator", "t": 0.5}, d).t == 0.5
    assert functional_from_config({"kind": "hoelder", "name": "cos2pi"}, d).name == "cos2pi"
    assert functional_from_config({"kind": "bv", "name": "p0"}, d).ratio == 1.0
    for bad in ({"kind": "indicator"}, {"kind": "hoelder", "name": "sin"}, {"kind": "spline"}):
        with pytest.raises(ConfigurationError):
            functional_from_config(bad, d)


# -- projection and perturbations ------------------------------------------------

def test_pi0_examples():
    proj = pi0_projection(constant_function(2.5), StepJump())
    assert np.all(proj(np.linspace(0, 1, 11)) == 0.0)
    proj = pi0_projection(indicator(0.5), StepJump())
    assert proj(0.75) == pytest.approx(-0.375, abs=1e-15)
    proj = pi0_projection(hoelder("identity"), Uniform())
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(proj(x), x - 0.5, atol=1e-14)


@pytest.mark.parametrize("d, f", PAIRS + [(Linear(), hoelder("abspow"))], ids=PAIR_IDS + ["linear-abspow"])
def test_pi0_is_a_tangent_direction(d, f):
    proj = pi0_projection(f, d)
    knots = np.union1d(d.breakpoints, proj.breakpoints)
    assert abs(integrate(proj, knots[(knots >= 0) & (knots <= d.alpha1)], FINE_SPEC)) <= 1e-10
    # D l(p0)[pi0 f] = int pi0 f = 0
    assert abs(dlog_likelihood(1, d, [proj], d)) <= 1e-8


def test_perturbation_bound_examples():
    # K = 1.5, zeta = 0.5, ||f|| = 1, ||Df/Dp0|| = 1
    f = indicator(0.5)
    assert perturbation_bound(f, StepJump()) == pytest.approx(1 / 6, abs=1e-15)
    zero = constant_function(0.0)
    assert math.isinf(perturbation_bound(zero, Linear()))
    with pytest.raises(UnsupportedFunctionError):
        perturbation_bound(hoelder("cos2pi"), StepJump())


def test_perturbation_bound_is_monotone_in_sup_norm():
    base = TestFunction("bv", "g", lambda x: x, 1.0, ratio=1.0)
    doubled = TestFunction("bv", "2g", lambda x: 2 * x, 2.0, ratio=1.0)
    for d in (Linear(), StepJump(), TruncExp(rate=2.0)):
        assert perturbation_bound(doubled, d) <= perturbation_bound(base, d)


def test_perturbation_validity_examples():
    f = hoelder("identity")
    d = Linear()
    assert check_perturbation_valid(Perturbation(0.0, f, d)).valid
    eta = perturbation_bound(f, d)
    for sign in (1, -1):
        assert check_perturbation_valid(Perturbation(sign * eta, f, d)).valid
    steep = hoelder("cos2pi")
    report = check_perturbation_valid(Perturbation(10 * perturbation_bound(steep, d), steep, d))
    assert not report.valid and not report.monotone and report.first_violation is not None


@pytest.mark.parametrize("d, f", PAIRS, ids=PAIR_IDS)
def test_perturbations_inside_bound_are_valid(d, f):
    eta = perturbation_bound(f, d)
    for e in (eta, -eta, eta / 2, -eta / 2):
        report = check_perturbation_valid(Perturbation(e, f, d))
        assert report.valid, report.reason


# -- derivatives -------------------------------------------------------------------

def test_dlog_examples():
    s = make_sample([0.1, 0.4, 0.9])
    assert dlog_likelihood(1, ONE, [ONE], s) == 1.0
    p_hat = grenander_fit(S2)
    assert p_hat.values[0] == pytest.approx(5 / 3)
    direction = as_evaluable(p_hat) - Uniform()
    assert dlog_likelihood(1, p_hat, [direction], S2) == pytest.approx(0.4, abs=1e-15)
    assert dlog_likelihood(2, ONE, [ONE, ONE], Uniform()) == pytest.approx(-1.0, abs=1e-14)
    assert dlog_likelihood(3, ONE, [ONE, ONE, ONE], Uniform()) == pytest.approx(2.0, abs=1e-14)


def test_dlog_domain_errors():
    p_hat = grenander_fit(S2)
    with pytest.raises(DomainError, match="observation 1"):
        dlog_likelihood(1, p_hat, [ONE], make_sample([0.5, 0.7]))
    with pytest.raises(DomainError):
        dlog_likelihood(1, p_hat, [ONE], Uniform())
    with pytest.raises(ValueError):
        dlog_likelihood(2, ONE, [ONE], Uniform())


def test_score_self_examples():
    assert score_self(S2, Uniform()) == pytest.approx(0.4, abs=1e-15)
    s = make_sample([0.25, 0.5, 0.75, 1.0])  # fit is exactly uniform on [0, 1]
    assert score_self(s, Uniform()) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("d", [Linear(), StepJump(), TruncExp(rate=2.0), Uniform()], ids=lambda d: d.family)
def test_score_self_is_non_negative(d):
    # P_n(p0 / p_hat) <= 1 for any monotone p0 at the maximiser
    for r in range(50):
        s = sample_iid(d, 200, 9, r)
        assert score_self(s, d) >= -1e-12


# -- plug-in functionals --------------------------------------------------------------

def test_plugin_examples():
    p_hat = grenander_fit(S2)
    assert plugin_minus_empirical(p_hat, S2, constant_function(1.0)) == 0.0
    assert plugin_minus_empirical(p_hat, S2, indicator(0.5)) == pytest.approx(1 / 3, abs=1e-15)
    # 0.6 is a hull vertex and an ECDF jump
    assert plugin_minus_empirical(p_hat, S2, indicator(0.6)) == pytest.approx(0.0, abs=1e-15)
    s = make_sample([0.2, 0.5, 0.9])
    p = grenander_fit(s)
    for t in (0.2, 0.5, 0.9):
        assert plugin_minus_empirical(p, s, indicator(t)) == pytest.approx(0.0, abs=1e-15)


def test_indicator_plugin_matches_quadrature():
    s = sample_iid(Linear(), 300, 4)
    p = grenander_fit(s)
    f = indicator(0.37)
    smooth = Evaluable(f, f.breakpoints)
    assert plugin_minus_empirical(p, s, f) == pytest.approx(plugin_minus_empirical(p, s, smooth), abs=1e-13)


def test_plugin_cos_matches_closed_form():
    s = sample_iid(Linear(), 1000, 21)
    p = grenander_fit(s)
    bp, v = p.breakpoints, p.values
    exact = np.sum(v * (np.sin(2 * np.pi * bp[1:]) - np.sin(2 * np.pi * bp[:-1]))) / (2 * np.pi)
    assert plugin_mean(p, hoelder("cos2pi")) == pytest.approx(exact, abs=1e-12)


def test_clt_statistic_examples():
    p_hat = grenander_fit(S2)
    assert clt_statistic(p_hat, Uniform(), constant_function(4.0), 2) == 0.0
    assert clt_statistic(Uniform().as_step(), Uniform(), hoelder("cos2pi"), 100) == pytest.approx(0.0, abs=1e-12)
    # F_hat(0.5) = 5/3 * 0.5 = 5/6 against F0(0.5) = 1/2
    value = clt_statistic(p_hat, Uniform(), indicator(0.5), 2)
    assert value == pytest.approx(math.sqrt(2) * (5 / 6 - 0.5), abs=1e-15)
    assert value == pytest.approx(0.47140, abs=5e-6)


def test_limit_variance_and_covariance_examples():
    assert limit_variance(constant_function(2.0), Linear()) == 0.0
    assert limit_variance(indicator(0.5), StepJump()) == 0.1875
    assert limit_variance(hoelder("identity"), Uniform()) == pytest.approx(1 / 12, abs=1e-14)
    assert gaussian_covariance(constant_function(1.0), hoelder("cos2pi"), Linear()) == pytest.approx(0.0, abs=1e-14)
    assert gaussian_covariance(indicator(0.3), indicator(0.7), Uniform()) == pytest.approx(0.09, abs=1e-15)
    for d, f in PAIRS:
        assert gaussian_covariance(f, f, d) == pytest.approx(limit_variance(f, d), abs=1e-10)


def test_cos_limit_variance_closed_form():
    # under 1.5 - x: P0 cos = -int x cos(2 pi x) = 0, P0 cos^2 = 1/2
    assert expectation(hoelder("cos2pi"), Linear()) == pytest.approx(0.0, abs=1e-13)
    assert limit_variance(hoelder("cos2pi"), Linear()) == pytest.approx(0.5, abs=1e-12)


# -- identities on simulated fits -----------------------------------------------------

@pytest.mark.parametrize("d, f", PAIRS, ids=PAIR_IDS)
def test_plugin_error_identity(d, f):
    proj = pi0_projection(f, d)
    for r in range(10):
        s = sample_iid(d, 150, 17, r)
        p = grenander_fit(s)
        lhs = abs(plugin_minus_empirical(p, s, f))
        first = dlog_likelihood(1, d, [proj], s)
        second = dlog_likelihood(2, d, [as_evaluable(p) - d, proj], d)
        assert lhs == pytest.approx(abs(first + second), abs=1e-6)


@pytest.mark.parametrize("d, f", PAIRS, ids=PAIR_IDS)
def test_boundary_derivative_inequality(d, f):
    eta = perturbation_bound(f, d) / 2
    proj = pi0_projection(f, d)
    for r in range(10):
        s = sample_iid(d, 150, 23, r)
        p = grenander_fit(s)
        lhs = abs(dlog_likelihood(1, p, [proj], s))
        assert lhs <= abs(score_self(s, d, p)) / eta + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-50, 50))
def test_argmax_invariance(seed, c):
    s = sample_iid(Linear(), 100, seed)
    p = grenander_fit(s)
    f = hoelder("cos2pi")
    shifted = as_evaluable(f) + c
    assert plugin_minus_empirical(p, s, shifted) == pytest.approx(plugin_minus_empirical(p, s, f), abs=1e-12)
