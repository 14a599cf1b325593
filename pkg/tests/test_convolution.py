import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sci

from grenander.convolution import (
    PiecewiseLinearFn,
    convolve_reference,
    convolve_steps,
    decomposition_terms,
)
from grenander.densities import Linear, StepJump, TruncExp, Uniform, sample_iid
from grenander.estimator import StepDensity, grenander_fit
from grenander.piecewise import PiecewisePoly, convolve_polys, to_poly

U1 = StepDensity.from_arrays([0, 1], [1.0])


def step(bp, v):
    return StepDensity.from_arrays(bp, v)


def test_uniform_triangle():
    c = convolve_steps(U1, U1)
    assert c.knots.tolist() == [0.0, 1.0, 2.0]
    assert c(1.0) == pytest.approx(1.0, abs=1e-15)
    assert c(0.5) == pytest.approx(0.5) and c(1.5) == pytest.approx(0.5)


def test_ramp_plateau_ramp():
    p = step([0, 0.5], [2.0])
    c = convolve_steps(p, U1)
    z = np.array([0.25, 0.5, 0.75, 1.0, 1.25, 1.5])
    np.testing.assert_allclose(c(z), [0.5, 1.0, 1.0, 1.0, 0.5, 0.0], atol=1e-15)


def test_narrow_mollifier_recovers_q():
    eps = 1e-3
    bp = np.array([0, 0.3, 1.0, 1.6])
    v = np.array([1.2, 0.6, 0.31])
    q = step(bp, v / np.dot(v, np.diff(bp)))
    c = convolve_steps(step([0, eps], [1 / eps]), q)
    x = np.array([0.1, 0.2, 0.5, 0.9, 1.2, 1.5])
    np.testing.assert_allclose(c(x), q(x), atol=1e-2)


def test_serialization_round_trip():
    c = convolve_steps(U1, step([0, 0.5], [2.0]))
    d = json.loads(c.to_json())
    assert set(d) == {"knots", "values"}
    back = PiecewiseLinearFn.from_dict(d)
    assert np.array_equal(back.knots, c.knots) and np.array_equal(back.values, c.values)


def test_convolve_reference_examples():
    tri = convolve_reference(Uniform(), Uniform())
    assert tri(1.0) == pytest.approx(1.0, abs=1e-14)
    assert tri(-0.5) == 0.0 and tri(2.5) == 0.0
    exact = convolve_reference(StepJump(), Uniform())
    steps = convolve_steps(StepJump().as_step(), U1)
    z = np.linspace(-0.5, 2.5, 301)
    np.testing.assert_allclose(exact(z), steps(z), atol=1e-13)
    smooth = convolve_reference(TruncExp(rate=2.0), Uniform())
    assert smooth(-0.1) == 0.0
    # quadrature evaluable against an independent adaptive integral
    d = TruncExp(rate=2.0)
    for zi in (0.3, 1.0, 1.7):
        ref = sci.quad(lambda x: d.pdf(x), max(0.0, zi - 1.0), min(1.0, zi))[0]
        assert smooth(zi) == pytest.approx(ref, abs=1e-8)


def test_linear_convolution_matches_adaptive_quadrature():
    a, b = Linear(), Linear(a=0.75, b=0.25, alpha1=2.0)
    c = convolve_reference(a, b)
    for z in (0.2, 0.9, 1.0, 1.5, 2.4, 2.99):
        lo, hi = max(0.0, z - 2.0), min(1.0, z)
        ref = sci.quad(lambda x: a.pdf(x) * b.pdf(z - x), lo, hi, epsabs=1e-14)[0]
        assert c(z) == pytest.approx(ref, abs=1e-12)
    assert c.integral() == pytest.approx(1.0, abs=1e-12)


# -- properties -------------------------------------------------------------

@st.composite
def step_densities(draw):
    m = draw(st.integers(1, 6))
    widths = draw(st.lists(st.floats(0.05, 2.0), min_size=m, max_size=m))
    heights = sorted(draw(st.lists(st.floats(0.05, 5.0), min_size=m, max_size=m)), reverse=True)
    bp = np.concatenate([[0.0], np.cumsum(widths)])
    v = np.asarray(heights)
    return step(bp, v / np.dot(v, np.diff(bp)))


@settings(max_examples=100, deadline=None)
@given(step_densities(), step_densities())
def test_convolution_properties(p, q):
    pq, qp = convolve_steps(p, q), convolve_steps(q, p)
    np.testing.assert_allclose(pq.values, qp.values, atol=1e-12)
    assert abs(pq.integral() - 1.0) <= 1e-10
    assert pq.knots[0] == 0.0 and pq.knots[-1] == p.support_end + q.support_end
    assert np.all(pq.values >= -1e-15)


@settings(max_examples=100, deadline=None)
@given(step_densities(), step_densities())
def test_two_exact_routes_agree(p, q):
    # rectangle-overlap sums against the polynomial antiderivative route
    a = convolve_steps(p, q)
    b = convolve_polys(to_poly(p), to_poly(q))
    z = np.union1d(a.knots, 0.5 * (a.knots[:-1] + a.knots[1:]))
    np.testing.assert_allclose(a(z), b(z), atol=1e-11)


def test_poly_abs_integral_against_adaptive_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(20):
        knots = np.sort(rng.uniform(0, 3, 6))
        coefs = rng.normal(size=(5, 4))
        f = PiecewisePoly(knots, coefs)
        ref = sum(
            sci.quad(lambda x: abs(f(x)), knots[i], knots[i + 1], epsabs=1e-13, limit=200)[0] for i in range(5)
        )
        assert f.abs_integral() == pytest.approx(ref, rel=1e-9, abs=1e-12)


# -- decomposition ------------------------------------------------------------

def test_decomposition_trivial_cases():
    p0, q0 = StepJump(), Uniform()
    p_hat = grenander_fit(sample_iid(p0, 50, 11))
    t = decomposition_terms(p0.as_step(), p_hat, p0, p0)
    assert t.first == 0.0 and t.cross == 0.0 and t.second > 0
    t = decomposition_terms(p_hat, q0.as_step(), p0, q0)
    assert t.second == 0.0 and t.cross == 0.0 and t.first > 0


@pytest.mark.parametrize("pair", [(Linear(), Linear(a=0.75, b=0.25, alpha1=2.0)), (StepJump(), Linear()),
                                  (TruncExp(rate=1.0), Uniform())])
def test_cross_term_within_young_bound(pair):
    d1, d2 = pair
    for r in range(20):
        p_hat = grenander_fit(sample_iid(d1, 200, 5, r))
        q_hat = grenander_fit(sample_iid(d2, 200, 5, r, 1))
        t = decomposition_terms(p_hat, q_hat, d1, d2)
        assert 0 <= t.cross <= t.young_bound
        assert t.first <= t.p_error_l1 + 1e-12 and t.second <= t.q_error_l1 + 1e-12


def test_cross_term_against_double_quadrature():
    d1, d2 = Linear(), Linear(a=0.75, b=0.25, alpha1=2.0)
    p_hat = grenander_fit(sample_iid(d1, 30, 3, 0))
    q_hat = grenander_fit(sample_iid(d2, 30, 3, 1))
    t = decomposition_terms(p_hat, q_hat, d1, d2)
    dp = lambda x: p_hat(x) - d1.pdf(x)
    dq = lambda x: q_hat(x) - d2.pdf(x)

    def conv(z):
        cuts = np.union1d(p_hat.breakpoints, z - q_hat.breakpoints)
        cuts = cuts[(cuts > 0) & (cuts < 1)]
        return sci.quad(lambda x: dp(x) * dq(z - x), 0, 1, points=cuts, limit=200)[0]

    z = np.linspace(0, 3, 1501)
    ref = np.trapezoid(np.abs([conv(zi) for zi in z]), z)
    assert t.cross == pytest.approx(ref, rel=1e-3)
