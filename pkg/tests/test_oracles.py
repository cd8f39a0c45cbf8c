from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, stats

from abclab import oracles as O

Y, A, B = 2.0, 1.2, 1.2


def _exp_pdf(y, theta):
    return np.where(y >= 0, theta * np.exp(-theta * np.maximum(y, 0)), 0.0)


def _normal_mean_pdf(sigma):
    return lambda y, theta: stats.norm.pdf(y, theta, sigma)


# ------------------------------------------------------------ exp-gamma

def test_expgamma_likelihood_limits():
    assert O.expgamma_abc_likelihood(Y, 2.0, 0.0) == pytest.approx(2 * np.exp(-4))
    assert O.expgamma_abc_likelihood(Y, 2.0, 1e-7) == pytest.approx(2 * np.exp(-4), rel=1e-6)


def test_expgamma_likelihood_value():
    expected = np.exp(-4) * (np.exp(1.82) - np.exp(-1.82)) / 1.82
    assert O.expgamma_abc_likelihood(Y, 2.0, 0.91) == pytest.approx(expected, rel=1e-13)


def test_expgamma_likelihood_window_past_zero():
    h = 3.0
    val = O.quadrature_abc_likelihood(_exp_pdf, 1.5, Y, "uniform", h, support=(0, np.inf))
    assert O.expgamma_abc_likelihood(Y, 1.5, h) == pytest.approx(val, rel=1e-8)


def test_expgamma_bias_values():
    assert O.expgamma_bias2(Y, 2.0, 0.91) == pytest.approx(0.91**2 * 8 * np.exp(-4) / 6)
    assert O.expgamma_bias2(Y, 2.0, 0.0) == 0.0


def test_expgamma_bias_order():
    p = 2 * np.exp(-4)
    err = [abs(O.expgamma_abc_likelihood(Y, 2.0, h) - p - O.expgamma_bias2(Y, 2.0, h))
           for h in (0.4, 0.2, 0.1)]
    assert 8 <= err[0] / err[1] <= 32 and 8 <= err[1] / err[2] <= 32


def test_expgamma_posterior_normalised():
    mass = integrate.quad(lambda t: O.expgamma_abc_posterior(t, Y, A, B, 0.91), 0, np.inf,
                          epsabs=0, epsrel=1e-12)[0]
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_expgamma_posterior_small_h_limit():
    th = np.linspace(0.01, 5, 200)
    exact = stats.gamma.pdf(th, A + 1, scale=1 / (Y + B))
    assert np.max(np.abs(O.expgamma_abc_posterior(th, Y, A, B, 1e-4) - exact)) < 1e-4


def test_expgamma_posterior_mean_increases_with_h():
    means = [integrate.quad(lambda t: t * O.expgamma_abc_posterior(t, Y, A, B, h), 0, np.inf)[0]
             for h in (0.01, 0.91, 1.8, 2.7)]
    assert np.all(np.diff(means) > 0)


def test_expgamma_posterior_matches_likelihood_times_prior():
    th = np.linspace(0.1, 4, 9)
    h = 0.91
    un = O.expgamma_abc_likelihood(Y, th, h) * stats.gamma.pdf(th, A, scale=1 / B)
    ratio = O.expgamma_abc_posterior(th, Y, A, B, h) / un
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


def test_expgamma_posterior_domain():
    with pytest.raises(ValueError):
        O.expgamma_abc_posterior(1.0, Y, A, B, Y + B)


def test_expgamma_posterior_cdf():
    cdf = O.expgamma_abc_posterior_cdf(Y, A, B, 0.91)
    assert cdf(0.0) == 0.0 and cdf(50.0) == pytest.approx(1.0)
    mid = integrate.quad(lambda t: O.expgamma_abc_posterior(t, Y, A, B, 0.91), 0, 0.7)[0]
    assert cdf(0.7) == pytest.approx(mid, abs=1e-6)


def test_cdfdiff_form_matches_closed_form():
    P = lambda x, th: np.where(x > 0, -np.expm1(-th * np.maximum(x, 0)), 0.0)  # noqa: E731
    prior = stats.gamma(A, scale=1 / B).pdf
    th = np.linspace(0.2, 3, 5)
    un = O.uniform_kernel_posterior_cdfdiff(P, prior, th, Y, 0.91)
    np.testing.assert_allclose(un, O.expgamma_abc_likelihood(Y, th, 0.91) * prior(th), rtol=1e-12)
    small = O.uniform_kernel_posterior_cdfdiff(P, prior, th, Y, 1e-6)
    np.testing.assert_allclose(small, _exp_pdf(Y, th) * prior(th), rtol=1e-4)


# ------------------------------------------------------------- gaussian

def test_gaussian_posterior_moments():
    assert O.gaussian_abc_moments(0.3, 1.0, 1.0, 0.0) == (0.3, 1.0)
    assert O.gaussian_abc_moments(0.0, 1.0, 1.0, 0.5)[1] == pytest.approx(1.25)
    assert O.gaussian_abc_moments(0.0, 1.0, 1.0, 0.0, omega=0.5)[1] == pytest.approx(2.0)


def test_gaussian_posterior_proper_prior_converges_to_prior():
    th = np.linspace(-3, 3, 7)
    post = O.gaussian_abc_posterior(th, 1.0, 1.0, 1.0, h=1e4, m0=0.0, s0=1.0)
    np.testing.assert_allclose(post, stats.norm.pdf(th), rtol=1e-6)


@pytest.mark.parametrize("h", [0.05, 0.5, 2.0])
def test_gaussian_kernel_convolution(h):
    sigma = 1.0 / np.sqrt(10)
    for th in (-1.0, 0.0, 0.7):
        q = O.quadrature_abc_likelihood(_normal_mean_pdf(sigma), th, 0.2, "gaussian", h)
        exact = O.gaussian_abc_likelihood(0.2, th, 1.0, 10, h)
        assert q == pytest.approx(exact, rel=1e-6)


def test_quadrature_small_h():
    val = O.quadrature_abc_likelihood(_exp_pdf, 1.3, Y, "epanechnikov", 1e-6, support=(0, np.inf))
    assert val == pytest.approx(1.3 * np.exp(-1.3 * Y), rel=1e-4)
    assert O.quadrature_abc_likelihood(_exp_pdf, 1.3, Y, "uniform", 0.0) == pytest.approx(
        1.3 * np.exp(-2.6))


@pytest.mark.parametrize("theta", np.linspace(0.3, 3.0, 5))
@pytest.mark.parametrize("h", [0.05, 0.3, 0.91, 1.5, 2.5])
def test_closed_forms_match_quadrature_grid(theta, h):
    exp_q = O.quadrature_abc_likelihood(_exp_pdf, theta, Y, "uniform", h, support=(0, np.inf))
    assert O.expgamma_abc_likelihood(Y, theta, h) == pytest.approx(exp_q, rel=1e-6)
    g_q = O.quadrature_abc_likelihood(_normal_mean_pdf(1.0), theta, 0.5, "gaussian", h)
    assert O.gaussian_abc_likelihood(0.5, theta, 1.0, 1, h) == pytest.approx(g_q, rel=1e-6)


# ------------------------------------------------------------- binomial

def test_binomial_match_probabilities():
    assert O.binomial_match_prob("s1", (1, 2)) == Fraction(5, 132)
    assert O.binomial_match_prob("s2", (1, 2)) == Fraction(5, 66)
    assert O.binomial_match_prob("s3", (3,)) == Fraction(1, 11)


def test_binomial_match_probabilities_sum_to_one():
    total = sum(O.binomial_match_prob("s1", (a, b)) for a in range(6) for b in range(6))
    assert total == 1
    total = sum(O.binomial_match_prob("s2", (a, b)) for a in range(6) for b in range(a, 6))
    assert total == 1


def test_binomial_match_errors():
    with pytest.raises(ValueError):
        O.binomial_match_prob("s2", (2, 1))
    with pytest.raises(ValueError):
        O.binomial_match_prob("s4", (1, 2))


# ------------------------------------------------------ posterior bias

def test_posterior_bias_vanishes_as_h_shrinks():
    th = np.linspace(0.05, 5, 100)
    exact, _ = O.expgamma_posterior_bias(th, Y, A, B, 1e-3)
    assert np.max(np.abs(exact)) < 1e-3


def test_posterior_bias_integrates_to_zero():
    th = np.linspace(0.0, 40.0, 400_001)
    exact, _ = O.expgamma_posterior_bias(th, Y, A, B, 0.91)
    assert abs(integrate.simpson(exact, x=th)) < 1e-8


def test_second_order_describes_bias_near_mode():
    mode = A / (Y + B)  # mode of Gamma(alpha + 1, y + beta)
    exact, second = O.expgamma_posterior_bias(np.array([mode]), Y, A, B, 0.91)
    assert abs(exact[0] - second[0]) < abs(exact[0])


# ------------------------------------------------------ count posteriors

def test_mixture_with_zero_tolerance_is_single_posterior():
    lam = np.linspace(30, 90, 13)
    np.testing.assert_allclose(O.discrete_mixture_posterior(lam, 112, 0, 2.0),
                               O.count_posterior(112, 2.0).pdf(lam), rtol=1e-14)


def test_mixture_variance_not_smaller():
    def var(h):
        m = O.DiscreteMixture(5, h, 1.0, 100.0)
        mean = m.mean()
        return integrate.quad(lambda x: (x - mean) ** 2 * m.pdf(x), 0, 100, limit=200)[0]

    assert var(1) >= var(0)


def test_mixture_weights_and_cdf():
    m = O.DiscreteMixture(112, 10, 2.0)
    assert m.counts.tolist() == list(range(102, 123))
    assert m.weights.sum() == pytest.approx(1.0)
    assert m.cdf(0.0) == 0.0 and m.cdf(100.0) == pytest.approx(1.0)
    assert integrate.quad(m.pdf, 0, 100, limit=200)[0] == pytest.approx(1.0, abs=1e-8)


def test_prior_predictive_count_probs_sum():
    k = np.arange(0, 1000)
    assert O.prior_predictive_count_probs(k, 2.0, 100.0).sum() == pytest.approx(1.0, abs=1e-9)


def test_truncated_gamma_mean():
    tg = O.TruncatedGamma(5.0, 0.5, 0.0, 6.0)
    num = integrate.quad(lambda x: x * tg.pdf(x), 0, 6)[0]
    assert tg.mean() == pytest.approx(num, rel=1e-9)
    with pytest.raises(ValueError):
        O.TruncatedGamma(5.0, 1.0, 1e6, 1e6 + 1)
